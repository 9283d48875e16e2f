from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

from app.services.cone import build_system, verify_effectivity
from app.services.divisors import is_f_nef
from app.services.errors import InputFormatError, SolverError, VerificationError
from app.services.mori import MoriCase, mori_check
from app.services.replay import replay
from app.services.serialization import (
    DivisorFile,
    divisor_from_model,
    fmt,
    mori_to_dict,
    replay_to_dict,
    report_to_dict,
    system_to_dict,
)
from app.services.symmetry import SymSetup

app = FastAPI(title="F-nef Verification API")

# CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


def _setup(n: int, m: int) -> SymSetup:
    try:
        return SymSetup(n, m)
    except VerificationError as e:
        raise HTTPException(status_code=400, detail=str(e))


@app.post("/fnef-check")
def fnef_check(body: DivisorFile):
    """
    Test a divisor for F-nefness.
    Coefficients are "p/q" strings; the first violating F-curve is returned as the witness.
    """
    try:
        divisor = divisor_from_model(body, source='request')
    except InputFormatError as e:
        raise HTTPException(status_code=400, detail=e.diagnostic())
    result = is_f_nef(divisor)
    return {
        "f_nef": result.is_nef,
        "witness": [list(block) for block in result.witness.blocks] if result.witness else None,
        "value": fmt(result.value) if result.value is not None else None,
    }


@app.get("/system/{n}/{m}")
def get_system(n: int, m: int):
    """
    The deduplicated symmetrized F-inequalities for S_m acting on the last m of n points.
    """
    return system_to_dict(build_system(_setup(n, m)))


@app.get("/verify/{n}/{m}")
def verify(n: int, m: int):
    setup = _setup(n, m)
    try:
        report = verify_effectivity(setup)
    except SolverError as e:
        raise HTTPException(status_code=500, detail=str(e))
    return report_to_dict(report, build_system(setup))


@app.get("/replay/{n}/{m}")
def replay_script(n: int, m: int):
    """
    Run the proof script through the independent checker.
    """
    setup = _setup(n, m)
    try:
        report = replay(setup)
    except SolverError as e:
        raise HTTPException(status_code=500, detail=str(e))
    return replay_to_dict(report, build_system(setup))


@app.get("/mori/{g}/{n}")
def mori(g: int, n: int):
    try:
        case = MoriCase(g, n)
    except VerificationError as e:
        raise HTTPException(status_code=400, detail=str(e))
    try:
        return mori_to_dict(mori_check(case))
    except SolverError as e:
        raise HTTPException(status_code=500, detail=str(e))


@app.get("/health")
async def health_check():
    """
    Health check endpoint
    """
    return {"status": "healthy"}
