from __future__ import annotations

import contextvars
import logging

from src.config.telemetry import CorrelationFilter, set_correlation_context


def _record() -> logging.LogRecord:
    return logging.LogRecord("cadops", logging.INFO, __file__, 1, "msg", None, None)


class TestCorrelationFilter:
    def test_defaults_to_empty_fields(self):
        record = _record()
        contextvars.Context().run(CorrelationFilter().filter, record)
        assert (record.command, record.run_id, record.model_name) == ("", "", "")

    def test_partial_updates_keep_other_fields(self):
        def scenario() -> logging.LogRecord:
            set_correlation_context(command="train", run_id="abc")
            set_correlation_context(model_name="synth-01")
            record = _record()
            CorrelationFilter().filter(record)
            return record

        record = contextvars.Context().run(scenario)
        assert (record.command, record.run_id, record.model_name) == ("train", "abc", "synth-01")
