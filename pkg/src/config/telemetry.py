"""OpenTelemetry and structured logging configuration.

Called once at the CLI entry point::

    from src.config.telemetry import configure_telemetry
    configure_telemetry()

Library modules only use ``logging.getLogger(__name__)`` and
``opentelemetry.trace.get_tracer(__name__)``; both are no-ops until this runs.
"""

from __future__ import annotations

import contextvars
import logging
from dataclasses import dataclass

from opentelemetry import trace
from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import OTLPSpanExporter
from opentelemetry.instrumentation.logging import LoggingInstrumentor
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor
from pythonjsonlogger.json import JsonFormatter

from src.config.settings import get_settings
from src.provenance import TOOL_VERSION

# ---------------------------------------------------------------------------
# Correlation context - set by CLI commands, read by CorrelationFilter
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _CorrelationContext:
    command: str = ""
    run_id: str = ""
    model_name: str = ""


_correlation_ctx: contextvars.ContextVar[_CorrelationContext | None] = contextvars.ContextVar(
    "correlation_ctx",
    default=None,
)

_EMPTY_CONTEXT = _CorrelationContext()


def set_correlation_context(
    *,
    command: str | None = None,
    run_id: str | None = None,
    model_name: str | None = None,
) -> None:
    """Update correlation fields available to all log records in the current context.

    Only provided (non-None) fields are changed; the rest keep their current value.
    """
    current = _correlation_ctx.get() or _EMPTY_CONTEXT
    _correlation_ctx.set(
        _CorrelationContext(
            command=command if command is not None else current.command,
            run_id=run_id if run_id is not None else current.run_id,
            model_name=model_name if model_name is not None else current.model_name,
        )
    )


# ---------------------------------------------------------------------------
# Logging filter that injects correlation fields
# ---------------------------------------------------------------------------


class CorrelationFilter(logging.Filter):
    """Injects ``command``, ``run_id`` and ``model_name`` into every log record.

    Values come from the current :func:`set_correlation_context` call (via
    *contextvars*), defaulting to ``""`` when unset.
    """

    def filter(self, record: logging.LogRecord) -> bool:
        ctx = _correlation_ctx.get() or _EMPTY_CONTEXT
        record.command = ctx.command  # type: ignore[attr-defined]
        record.run_id = ctx.run_id  # type: ignore[attr-defined]
        record.model_name = ctx.model_name  # type: ignore[attr-defined]
        return True


# ---------------------------------------------------------------------------
# Idempotency guard
# ---------------------------------------------------------------------------

_configured = False


# ---------------------------------------------------------------------------
# Public entry point
# ---------------------------------------------------------------------------


def configure_telemetry(log_level: str | None = None) -> None:
    """Set up optional OpenTelemetry tracing + JSON structured logging on stderr.

    Safe to call multiple times - subsequent calls are no-ops.

    Settings consumed: ``OTEL_ENABLED``, ``OTEL_SERVICE_NAME``,
    ``OTEL_EXPORTER_OTLP_ENDPOINT`` and ``LOG_LEVEL`` (overridden by
    *log_level* when given).
    """
    global _configured
    if _configured:
        return
    _configured = True

    settings = get_settings()

    # ── Tracing ──────────────────────────────────────────────────────────
    if settings.OTEL_ENABLED:
        resource = Resource.create(
            {
                "service.name": settings.OTEL_SERVICE_NAME,
                "service.version": TOOL_VERSION,
            }
        )
        provider = TracerProvider(resource=resource)
        exporter = OTLPSpanExporter(endpoint=settings.OTEL_EXPORTER_OTLP_ENDPOINT, insecure=True)
        provider.add_span_processor(BatchSpanProcessor(exporter))
        trace.set_tracer_provider(provider)

        # Injects otelTraceID / otelSpanID into log records.
        LoggingInstrumentor().instrument(set_logging_format=False)

    # ── JSON structured logging ──────────────────────────────────────────
    formatter = JsonFormatter(
        fmt="%(asctime)s %(levelname)s %(name)s %(message)s %(command)s %(run_id)s %(model_name)s",
        rename_fields={
            "asctime": "timestamp",
            "levelname": "level",
        },
    )

    handler = logging.StreamHandler()
    handler.setFormatter(formatter)
    handler.addFilter(CorrelationFilter())

    root = logging.getLogger()
    root.handlers.clear()
    root.addHandler(handler)
    root.setLevel((log_level or settings.LOG_LEVEL).upper())
