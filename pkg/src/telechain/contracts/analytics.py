"""Analytics contract: k-anonymous aggregates over opted-in metadata.

The cohort is every record matching the type filter whose patient holds an
ACTIVE analytics consent covering the requesting analyst and exposed the
queried field in public metadata.  If fewer than k distinct patients remain,
no report is produced.  Reports carry aggregates only, never patient ids.
"""

from __future__ import annotations

from .. import canonical
from ..errors import ContractError
from ..identity import Role
from . import base, consent

AGGREGATES = ("COUNT", "MEAN", "HISTOGRAM")
ANY_TYPE = "*"


def analyze_data(ctx) -> bytes:
    ctx.require_role(Role.ANALYST, "NOT_ANALYST")
    record_type = ctx.arg_str(0)
    field = ctx.arg_str(1)
    aggregate = ctx.arg_str(2)
    if aggregate not in AGGREGATES:
        raise ContractError("BAD_QUERY", f"unknown aggregate {aggregate!r}")
    ctx.require(bool(field), "BAD_QUERY", "empty field")

    field_key = field.encode()
    field_seen = False
    cohort_patients: set[str] = set()
    values: list = []
    consent_cache: dict[str, bool] = {}

    for _, raw in ctx.range_scan(base.NS_RECORD_META):
        meta = canonical.decode(raw)
        if record_type != ANY_TYPE and meta[b"type"] != record_type:
            continue
        if field_key not in meta[b"metadata"]:
            continue
        field_seen = True
        patient = meta[b"patient"]
        if patient not in consent_cache:
            consent_cache[patient] = consent.allows_analytics(ctx, patient, ctx.caller)
        if not consent_cache[patient]:
            continue
        cohort_patients.add(patient)
        values.append(meta[b"metadata"][field_key])

    if not field_seen:
        raise ContractError("UNKNOWN_FIELD", field)
    cohort_size = len(cohort_patients)
    if cohort_size < ctx.cfg.analytics_k:
        raise ContractError("COHORT_TOO_SMALL",
                            f"{cohort_size} < k={ctx.cfg.analytics_k}")

    if aggregate == "COUNT":
        result = {b"count": len(values)}
    else:
        if not all(isinstance(v, int) for v in values):
            raise ContractError("BAD_QUERY", f"field {field!r} is not numeric")
        if aggregate == "MEAN":
            total = sum(values)
            result = {
                b"sum": total,
                b"count": len(values),
                b"mean_milli": total * 1000 // len(values),
            }
        else:  # HISTOGRAM: exact value -> frequency
            histogram: dict[bytes, int] = {}
            for v in values:
                bucket = str(v).encode()
                histogram[bucket] = histogram.get(bucket, 0) + 1
            result = {b"histogram": histogram}

    job_id = ctx.new_id(b"job")
    report = {
        b"job_id": job_id,
        b"requester": ctx.caller,
        b"query": {b"record_type": record_type, b"field": field, b"aggregate": aggregate},
        b"cohort_size": cohort_size,
        b"result": result,
        b"computed_at": ctx.client_time,
    }
    base.put_map(ctx, base.key(base.NS_INSIGHT, job_id), report)
    return canonical.encode(report)


def get_insights(ctx) -> bytes:
    job_id = ctx.arg_str(0)
    raw = ctx.get_state(base.key(base.NS_INSIGHT, job_id))
    ctx.require(raw is not None, "NOT_FOUND", job_id)
    report = canonical.decode(raw)
    if report[b"requester"] != ctx.caller and ctx.creator.role is not Role.ADMIN:
        raise ContractError("ACCESS_DENIED", ctx.caller)
    return raw


FUNCTIONS = {
    "analyze_data": analyze_data,
    "get_insights": get_insights,
}
