"""
Health Check Endpoints
"""
from fastapi import APIRouter, status
from datetime import datetime, timezone

from app.core.config import settings

router = APIRouter()


@router.get("/health", status_code=status.HTTP_200_OK)
async def healthCheck():
    """
    Basic health check

    The lab has no external services, so liveness is the whole check.

    Response:
    {
        "status": "healthy",
        "version": "0.1.0",
        "environment": "development",
        "timestamp": "2026-01-30T10:00:00.000000+00:00"
    }
    """
    return {
        "status": "healthy",
        "version": settings.VERSION,
        "environment": settings.ENVIRONMENT,
        "timestamp": datetime.now(timezone.utc).isoformat()
    }


"""
Usage:
   - Docker: HEALTHCHECK --interval=30s CMD curl /api/v1/health
   - Kubernetes: livenessProbe.httpGet.path: /api/v1/health
"""
