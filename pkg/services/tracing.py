"""
Tracing with OpenTelemetry

Wraps commands and heavy computations in spans. Spans go to a console
exporter on stderr; there is no network exporter. Disabled unless
TRACING_ENABLED=true or the CLI passes enabled=True.

Usage:
    from services import tracing

    tracing.initialize_tracing(service_name="schur_sigma", enabled=True)

    with tracing.start_span("p_quotient", attributes={"n": 2}) as span:
        ...

    @tracing.traced("sl2")
    def series_formula_check(M):
        ...
"""

import functools
import os
import sys
from contextlib import contextmanager
from typing import Any, Optional

import structlog
from opentelemetry import trace
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import ConsoleSpanExporter, SimpleSpanProcessor

logger = structlog.get_logger(__name__)

# Global tracer
_tracer: Optional[trace.Tracer] = None
_initialized = False


def initialize_tracing(service_name: str = "schur_sigma", enabled: bool = None):
    """
    Initialize OpenTelemetry tracing

    Args:
        service_name: Name of this service in traces
        enabled: Enable/disable tracing (default: TRACING_ENABLED env, false)
    """
    global _tracer, _initialized

    if _initialized:
        logger.debug("tracing_already_initialized")
        return

    if enabled is None:
        enabled = os.getenv("TRACING_ENABLED", "false").lower() == "true"

    if not enabled:
        logger.debug("tracing_disabled")
        _initialized = True
        return

    try:
        resource = Resource(attributes={
            "service.name": service_name,
            "toolkit.profile": os.getenv("SCHUR_PROFILE", "default"),
        })
        tracer_provider = TracerProvider(resource=resource)
        tracer_provider.add_span_processor(SimpleSpanProcessor(ConsoleSpanExporter(out=sys.stderr)))
        trace.set_tracer_provider(tracer_provider)
        _tracer = trace.get_tracer(__name__)
        _initialized = True

        logger.info("tracing_initialized", service_name=service_name)

    except Exception as e:
        logger.error(
            "tracing_initialization_failed",
            error=str(e),
            error_type=type(e).__name__
        )
        # Tracing problems never stop a verification run
        _initialized = True


@contextmanager
def start_span(name: str, attributes: Optional[dict] = None):
    """
    Create a new span

    Args:
        name: Span name
        attributes: Optional attributes to add to span

    Yields:
        Span object (a non-recording span when tracing is off)
    """
    if not _tracer:
        yield trace.get_current_span()
        return

    with _tracer.start_as_current_span(name) as span:
        if attributes:
            for key, value in attributes.items():
                span.set_attribute(key, str(value))

        try:
            yield span
        except Exception as e:
            span.record_exception(e)
            span.set_status(trace.Status(trace.StatusCode.ERROR, str(e)))
            raise


def get_tracer() -> Optional[trace.Tracer]:
    """Get the global tracer"""
    return _tracer


def is_initialized() -> bool:
    """Check if tracing is initialized"""
    return _initialized


def add_span_attribute(key: str, value: Any):
    """Add attribute to current span"""
    span = trace.get_current_span()
    if span.is_recording():
        span.set_attribute(key, str(value))


def add_span_event(name: str, attributes: Optional[dict] = None):
    """Add event to current span"""
    span = trace.get_current_span()
    if span.is_recording():
        span.add_event(name, attributes=attributes or {})


def traced(section: str):
    """
    Decorator running the wrapped function inside a span

    Usage:
        @traced("pquotient")
        def p_quotient(presentation, max_class):
            ...
    """
    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            with start_span(f"{section}.{func.__name__}", attributes={"section": section}) as span:
                result = func(*args, **kwargs)
                if span.is_recording():
                    span.set_status(trace.Status(trace.StatusCode.OK))
                return result
        return wrapper
    return decorator
