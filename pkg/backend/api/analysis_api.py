#!/usr/bin/env python3
"""
Hypocoax Analysis API - FastAPI Backend
Certification, theory exponents and Besov norms over HTTP

Author: Hypocoax Team
"""

from fastapi import FastAPI, File, HTTPException, Query, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, model_validator
from typing import Any, Dict, List, Optional
import sys
from pathlib import Path

# Make the package importable when running from a source checkout
sys.path.append(str(Path(__file__).parent.parent.parent / "src"))
from hypocoax import __version__
from hypocoax.analysis.pipeline import certify_summary
from hypocoax.analysis.report import json_safe
from hypocoax.analysis.theory import theory_exponents
from hypocoax.config import configure_logging
from hypocoax.errors import HypocoaxError, UnknownSystem
from hypocoax.lp.field_io import read_lpf1_bytes
from hypocoax.lp.littlewood_paley import BANDS, BesovQuery, besov_report
from hypocoax.systems.registry import available_systems, get_system
from hypocoax.systems.system_model import make_linear_system

# Initialize FastAPI
app = FastAPI(
    title="Hypocoax Analysis API",
    description="Hypocoercivity certification and decay predictions for partially dissipative systems",
    version=__version__
)

# CORS middleware (allow notebooks and dashboards to connect)
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

service_status = {
    "loaded": False,
    "error": None,
    "systems_available": []
}


# ============================================================
# MODELS (Request/Response schemas)
# ============================================================

class LinearSystemPayload(BaseModel):
    """Constant-coefficient system given inline"""
    A: List[List[List[float]]] = Field(..., description="Coefficients A^0..A^d, shape (d+1, n, n)")
    Lmat: List[List[float]] = Field(..., description="Relaxation matrix, shape (n, n)")
    n1: int = Field(..., ge=0, description="Number of conserved components (0: every component is damped)")
    equilibrium: Optional[List[float]] = Field(None, description="Constant state V-bar; zero when omitted")
    S: Optional[List[List[float]]] = Field(None, description="Symmetrizer; identity when omitted")


class CertifyRequest(BaseModel):
    """Request model for certification"""
    system: Optional[str] = Field(None, description="Built-in system key")
    linear: Optional[LinearSystemPayload] = Field(None, description="Inline linear system")
    gamma: float = Field(2.0, ge=1.0, description="Adiabatic exponent (built-in systems)")
    lam: float = Field(1.0, gt=0, alias="lambda", description="Damping strength (built-in systems)")
    epsilon: Optional[float] = Field(None, gt=0, lt=1, description="Fixed schedule parameter; autotuned when omitted")

    @model_validator(mode="after")
    def one_system(self) -> "CertifyRequest":
        if (self.system is None) == (self.linear is None):
            raise ValueError("Give exactly one of 'system' or 'linear'")
        return self

    class Config:
        populate_by_name = True
        json_schema_extra = {
            "example": {
                "linear": {
                    "A": [[[1, 0], [0, 1]], [[0, 0.5], [0.5, 0]]],
                    "Lmat": [[0, 0], [0, 1]],
                    "n1": 1
                },
                "epsilon": 0.2
            }
        }


class StatusResponse(BaseModel):
    """API status response"""
    status: str
    version: str
    systems_available: list
    features_available: Dict[str, bool]


# ============================================================
# STARTUP/SHUTDOWN EVENTS
# ============================================================

@app.on_event("startup")
async def startup_event():
    """Load the system registry on startup"""
    configure_logging()
    try:
        service_status["systems_available"] = available_systems()
        service_status["loaded"] = True
        print(f"[OK] {len(service_status['systems_available'])} built-in system(s) available")
    except Exception as e:
        service_status["error"] = str(e)
        print(f"[ERROR] Registry not available: {e}")


@app.on_event("shutdown")
async def shutdown_event():
    """Cleanup on shutdown"""
    print("Shutting down analysis API...")


def _resolve(request: CertifyRequest):
    if request.linear is not None:
        lin = request.linear
        return make_linear_system(lin.A, lin.Lmat, lin.n1, lin.equilibrium, lin.S, name="inline")
    return get_system(request.system, gamma=request.gamma, lam=request.lam)


def _unprocessable(e: HypocoaxError) -> HTTPException:
    status = 404 if isinstance(e, UnknownSystem) else 422
    return HTTPException(status_code=status, detail=f"{type(e).__name__}: {e}")


# ============================================================
# ENDPOINTS
# ============================================================

@app.get("/", tags=["Root"])
async def root():
    """Root endpoint - API information"""
    return {
        "message": "Hypocoax Analysis API",
        "version": __version__,
        "docs": "/docs",
        "status": "/api/status"
    }


@app.get("/api/status", response_model=StatusResponse, tags=["Status"])
async def get_status():
    """
    Get API status and availability
    """
    return {
        "status": "online" if service_status["loaded"] else "error",
        "version": __version__,
        "systems_available": service_status["systems_available"],
        "features_available": {
            "certification": service_status["loaded"],
            "theory_exponents": True,
            "besov_norms": True,
            "simulation": False  # CLI only
        }
    }


@app.get("/api/health", tags=["Health"])
async def health_check():
    """
    Health check endpoint

    Returns 200 OK once the registry is loaded.
    """
    if not service_status["loaded"]:
        return JSONResponse(
            status_code=503,
            content={
                "status": "unhealthy",
                "message": "Registry not loaded",
                "error": service_status.get("error")
            }
        )
    return {"status": "healthy", "message": "API is running"}


@app.get("/api/systems", tags=["Systems"])
async def get_systems():
    """List built-in systems with their dimensions"""
    systems = []
    for key in available_systems():
        spec = get_system(key)
        systems.append({"key": key, "d": spec.d, "n": spec.n, "n1": spec.n1, "linear": spec.linear})
    return {"systems": systems, "total": len(systems)}


@app.post("/api/certify", tags=["Certification"])
def certify(request: CertifyRequest):
    """
    Certify the frequency weight of a built-in or inline system

    **Returns:** SK verdict, N_Vbar, c_min, the epsilon schedule and
    where on the frequency grid the dissipation rate is smallest.
    """
    try:
        return json_safe(certify_summary(_resolve(request), epsilon=request.epsilon))
    except HypocoaxError as e:
        raise _unprocessable(e)


@app.get("/api/theory/exponents", tags=["Theory"])
async def get_theory_exponents(
    d: int = Query(..., ge=1, le=3, description="Dimension"),
    sigma1: float = Query(..., description="Negative-regularity index of the datum"),
    sigma: float = Query(..., description="Regularity of the measured norm"),
    variant: str = Query("general", pattern="^(general|refined)$", description="general or refined")
):
    """Predicted algebraic decay exponents and the branch each one comes from"""
    try:
        return theory_exponents(d, sigma1, sigma, variant).to_dict()
    except HypocoaxError as e:
        raise _unprocessable(e)


@app.post("/api/lp-norm", tags=["Littlewood-Paley"])
async def lp_norm(
    field: UploadFile = File(..., description="LPF1 field file"),
    s: float = Query(..., description="Regularity index"),
    r: str = Query("1", pattern="^(1|inf)$", description="Summation exponent"),
    band: str = Query("all", description=f"One of {BANDS}"),
    threshold: Optional[float] = Query(None, description="Band threshold")
):
    """Besov semi-norm and dyadic block norms of an uploaded field"""
    payload = await field.read()
    try:
        field_ = read_lpf1_bytes(payload)
        query = BesovQuery(s=s, r=float("inf") if r == "inf" else 1.0, band=band, threshold=threshold)
        report = besov_report(field_, [query])
    except HypocoaxError as e:
        raise _unprocessable(e)
    except ValueError as e:
        raise HTTPException(status_code=422, detail=str(e))
    result: Dict[str, Any] = {"key": query.key, "norm": report.values[query.key], **report.to_dict()}
    return json_safe(result)


# ============================================================
# ERROR HANDLERS
# ============================================================

@app.exception_handler(404)
async def not_found_handler(request, exc):
    detail = getattr(exc, "detail", None) or "Endpoint not found"
    return JSONResponse(
        status_code=404,
        content={"detail": detail}
    )


@app.exception_handler(500)
async def internal_error_handler(request, exc):
    return JSONResponse(
        status_code=500,
        content={"detail": "Internal server error"}
    )


# ============================================================
# MAIN
# ============================================================

if __name__ == "__main__":
    import uvicorn

    print("=" * 60)
    print("Hypocoax Analysis API")
    print("=" * 60)
    print("\nStarting server...")
    print("API Documentation: http://localhost:8000/docs")
    print("API Status: http://localhost:8000/api/status")
    print("\n" + "=" * 60)

    uvicorn.run(
        "analysis_api:app",
        host="0.0.0.0",
        port=8000,
        reload=True,
        log_level="info"
    )
