"""HTTP service exposing operator runs, padding plans, audits and data
generation. Tables travel inline as row lists; reports come back as the
same JSON documents the CLI writes.
"""

from __future__ import annotations

from typing import List, Optional, Tuple

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .audit import check_comm_oblivious, check_comp_oblivious, failure_probe, oracle_join
from .cluster import ClusterConfig
from .errors import ObJoinError, PaddingOverflow
from .padding import pad_align, pad_expansion, pad_shuffle_by_key
from .runner import RunSpec, execute
from .tables import join_stats, max_degree, zipf_keys

app = FastAPI(title="objoin", version=__version__,
              description="Oblivious distributed join simulator")


class RunRequest(BaseModel):
    operator: str = Field(description="join | pkjoin | sort | expand")
    p: int = Field(ge=1)
    sigma: int = Field(default=40, ge=1)
    seed: int = 0
    padding: str = "infer"
    m_bound: Optional[int] = None
    left: List[Tuple[str, int]] = Field(default_factory=list,
                                        description="(payload, key) rows")
    right: Optional[List[Tuple[int, str]]] = Field(
        default=None, description="(key, payload) rows")
    degrees: Optional[List[int]] = None


class RunResponse(BaseModel):
    report: dict
    info: dict
    output_rows: List[list]


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/run", response_model=RunResponse)
def run_operator(req: RunRequest) -> RunResponse:
    try:
        spec = RunSpec(operator=req.operator, p=req.p, sigma=req.sigma,
                       seed=req.seed, padding=req.padding, m_bound=req.m_bound)
        result = execute(spec, req.left, req.right, req.degrees)
    except PaddingOverflow as exc:
        raise HTTPException(status_code=409, detail=f"padding overflow: {exc}")
    except (ObJoinError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return RunResponse(report=result.report.to_dict(), info=result.info,
                       output_rows=[list(r) for r in result.output_rows])


class PlanRequest(BaseModel):
    n_i: int = Field(ge=0)
    p: int = Field(ge=1)
    sigma: int = Field(ge=1)
    n_total: Optional[int] = None
    m_bound: Optional[int] = None


@app.post("/plans/{theorem}")
def plan(theorem: str, req: PlanRequest) -> dict:
    if theorem == "shuffle-by-key":
        return pad_shuffle_by_key(req.n_i, req.p, req.sigma).as_dict()
    if theorem == "expansion":
        if req.n_total is None or req.m_bound is None:
            raise HTTPException(status_code=422,
                                detail="expansion plan needs n_total and m_bound")
        return pad_expansion(req.n_i, req.n_total, req.m_bound,
                             req.p, req.sigma).as_dict()
    if theorem == "align":
        return pad_align(req.n_i, req.p, req.sigma).as_dict()
    raise HTTPException(status_code=404, detail=f"unknown theorem {theorem!r}")


class CommAuditRequest(BaseModel):
    operator: str
    p: int = Field(ge=1)
    sigma: int = Field(default=40, ge=1)
    seed: int = 0
    trials: int = Field(default=20, ge=2)
    n: int = 64
    n2: Optional[int] = None
    m_bound: Optional[int] = None


@app.post("/audit/communication")
def audit_comm(req: CommAuditRequest) -> dict:
    config = ClusterConfig(p=req.p, sigma=req.sigma, master_seed=req.seed)
    profile = {"n": req.n, "n2": req.n2 or req.n}
    if req.m_bound is not None:
        profile["m_bound"] = req.m_bound
    try:
        verdict = check_comm_oblivious(req.operator, config, profile,
                                       trials=req.trials, seed=req.seed)
    except ObJoinError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return verdict.as_dict()


class CompAuditRequest(BaseModel):
    primitive: str
    size: int = Field(default=64, ge=0)
    trials: int = Field(default=50, ge=2)
    seed: int = 0


@app.post("/audit/computation")
def audit_comp(req: CompAuditRequest) -> dict:
    try:
        verdict = check_comp_oblivious(req.primitive, req.size,
                                       trials=req.trials, seed=req.seed)
    except ObJoinError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return verdict.as_dict()


class ProbeRequest(BaseModel):
    sigma: int = Field(ge=1)
    trials: int = Field(default=10000, ge=1)
    n: int = 4096
    p: int = Field(default=4, ge=1)
    seed: int = 0
    mode: str = "counts"


@app.post("/audit/failure-probe")
def audit_probe(req: ProbeRequest) -> dict:
    return failure_probe(req.sigma, req.trials, n=req.n, p=req.p,
                         seed=req.seed, mode=req.mode).as_dict()


class ZipfRequest(BaseModel):
    rows: int = Field(ge=1)
    domain: int = Field(ge=1)
    z: float = Field(ge=0)
    seed: int = 0


@app.post("/datasets/zipf")
def dataset_zipf(req: ZipfRequest) -> dict:
    keys = zipf_keys(req.rows, req.domain, req.z, req.seed)
    return {"rows": [[k, i + 1] for i, k in enumerate(keys)],
            "alpha": max_degree(keys)}


class OracleRequest(BaseModel):
    left: List[Tuple[str, int]]
    right: List[Tuple[int, str]]


@app.post("/oracle/join")
def oracle(req: OracleRequest) -> dict:
    rows = oracle_join(req.left, req.right)
    stats = join_stats([b for _, b in req.left], [b for b, _ in req.right])
    return {"rows": [list(r) for r in rows], "stats": stats.as_dict()}
