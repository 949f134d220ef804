"""
API v1 Main Router
"""
from fastapi import APIRouter
from app.api.v1.endpoints import health, norms, flows, transport, heat, experiments

apiRouter = APIRouter()

apiRouter.include_router(
    health.router,
    tags=["Health"]
)

# Norm geometry
apiRouter.include_router(
    norms.router,
    prefix="/norms",
    tags=["Norms"]
)

# Gradient flows and skew convexity
apiRouter.include_router(
    flows.router,
    prefix="/flows",
    tags=["Flows"]
)

# Wasserstein distances and Theta
apiRouter.include_router(
    transport.router,
    prefix="/transport",
    tags=["Transport"]
)

# Streaming heat solves
apiRouter.include_router(
    heat.router,
    prefix="/heat",
    tags=["Heat"]
)

apiRouter.include_router(
    experiments.router,
    prefix="/experiments",
    tags=["Experiments"]
)
