"""
Heat Endpoints
Streams per-frame diagnostics of a heat solve as server-sent events
"""
from fastapi import APIRouter
from fastapi.responses import StreamingResponse
import json

from app.modules.entropy_transport import Grid
from app.modules.heat_pde import HeatConfig, heatService
from app.modules.norms import normService
from app.schemas import FrameEvent, GaussianHeatRequest
from app.utils.logger import logger

router = APIRouter()


def format_sse(event: str, data: dict) -> str:
    """Format SSE event with single-line JSON for proper parsing"""
    return f"event: {event}\ndata: {json.dumps(data)}\n\n"


def streamHeatFrames(request: GaussianHeatRequest):
    """
    Yields SSE events:
    - event: frame, data: {"t": ..., "mass": ..., "entropy": ..., ...}
    - event: done, data: {"frames": n}
    - event: error, data: {"error": "...", "type": "..."} on failure
    """
    try:
        norm = normService.fromConfig(request.norm)
        dim = norm.dim
        grid = Grid.cube(request.half_width, request.cells, dim=dim)
        center = (request.center + [0.0] * dim)[:dim]
        u0 = heatService.gaussianProfile(norm, center, request.a, grid)
        cfg = HeatConfig(
            grid=grid,
            dt=request.dt,
            tEnd=request.t_end,
            scheme=request.scheme,
            snapshotStride=request.snapshot_stride,
        )
        traj = heatService.heatSolve(norm, u0, cfg)
        for diag in traj.diagnostics:
            event = FrameEvent(**diag.toRow())
            yield format_sse("frame", event.model_dump(by_alias=True))
        yield format_sse("done", {"frames": len(traj.diagnostics)})
    except Exception as e:
        logger.error(f"❌ Heat stream failed: {e}")
        yield format_sse("error", {"error": str(e), "type": type(e).__name__})
        yield format_sse("done", {})


@router.post("/gaussian/stream")
def gaussianHeatStream(request: GaussianHeatRequest):
    """
    Heat flow of a Gaussian-form profile, one `frame` event per snapshot

    Returns:
        StreamingResponse with Server-Sent Events
    """
    return StreamingResponse(
        streamHeatFrames(request),
        media_type="text/event-stream",
        headers={
            "Cache-Control": "no-cache",
            "X-Accel-Buffering": "no",
        },
    )
