"""Strict JSON schemas for configuration input and every emitted document."""

from __future__ import annotations

import jsonschema

RATIONAL = {"type": "string", "pattern": r"^\s*[-+]?\d+(\s*/\s*\d+)?\s*$"}
NUMBER_OR_RATIONAL = {"anyOf": [{"type": "number"}, RATIONAL]}
FLOAT_LIST = {"type": "array", "items": {"type": "number"}}

POLYNOMIAL = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dimension", "terms"],
    "properties": {
        "dimension": {"type": "integer", "minimum": 1},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["exps", "coeff"],
                "properties": {
                    "exps": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "coeff": NUMBER_OR_RATIONAL,
                },
            },
        },
    },
}

HYPERPLANE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["normal", "offset"],
    "properties": {
        "normal": {"type": "array", "items": NUMBER_OR_RATIONAL, "minItems": 1},
        "offset": NUMBER_OR_RATIONAL,
        "exact": {
            "type": "object",
            "additionalProperties": False,
            "required": ["normal", "offset"],
            "properties": {"normal": {"type": "array", "items": RATIONAL}, "offset": RATIONAL},
        },
    },
}

SUBSPACE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["basepoint", "basis"],
    "properties": {"basepoint": FLOAT_LIST, "basis": {"type": "array", "items": FLOAT_LIST}},
}

MOLLIFIER = {
    "oneOf": [
        {"type": "string", "enum": ["gaussian", "bump"]},
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "sigma"],
            "properties": {"kind": {"const": "gaussian"}, "sigma": {"type": "number", "exclusiveMinimum": 0}},
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "epsilon"],
            "properties": {
                "kind": {"const": "bump"},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "derivatives": {"enum": ["exact", "fd"]},
            },
        },
    ]
}

R_GRID = {
    "type": "object",
    "additionalProperties": False,
    "required": ["r_min", "r_max", "count"],
    "properties": {
        "r_min": {"type": "number", "exclusiveMinimum": 0},
        "r_max": {"type": "number", "exclusiveMinimum": 0},
        "count": {"type": "integer", "minimum": 8},
    },
}

BOX = {
    "type": "object",
    "additionalProperties": False,
    "required": ["lo", "hi"],
    "properties": {"lo": FLOAT_LIST, "hi": FLOAT_LIST},
}

CONFIG = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dimension", "sources"],
    "properties": {
        "dimension": {"type": "integer", "minimum": 1},
        "sources": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["point", "weight"],
                "properties": {"point": {"type": "array", "items": NUMBER_OR_RATIONAL}, "weight": POLYNOMIAL},
            },
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mollifier": MOLLIFIER,
                "quad_order": {"type": "integer", "minimum": 4},
                "r_grid": R_GRID,
                "tolerance": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "box": BOX,
            },
        },
        "samples": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"on": {"type": "integer", "minimum": 0}, "off": {"type": "integer", "minimum": 0}},
        },
        "candidates": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "hyperplanes": {"type": "array", "items": HYPERPLANE},
                "cones": {"type": "array", "items": POLYNOMIAL},
            },
        },
    },
}

PREDICTION = {
    "type": "object",
    "additionalProperties": False,
    "required": ["generators", "hyperplanes", "edge", "basepoint", "containment_only"],
    "properties": {
        "generators": {"type": "array", "minItems": 1, "items": POLYNOMIAL},
        "generators_text": {"type": "array", "items": {"type": "string"}},
        "hyperplanes": {"type": "array", "items": HYPERPLANE},
        "edge": {"anyOf": [{"type": "null"}, SUBSPACE]},
        "basepoint": {"type": "array", "items": RATIONAL},
        "containment_only": {"type": "boolean"},
        "notes": {"type": "array", "items": {"type": "string"}},
    },
}

_NULLABLE_NUMBER = {"type": ["number", "null"]}

REPORT = {
    "type": "object",
    "additionalProperties": False,
    "required": ["status", "reference_scale", "tau", "r_grid", "summary", "sampling_failed", "notes", "config", "points"],
    "properties": {
        "status": {"enum": ["PASS", "FAIL"]},
        "reference_scale": {"type": "number"},
        "tau": {"type": "number"},
        "r_grid": R_GRID,
        "summary": {
            "type": "object",
            "additionalProperties": False,
            "required": [
                "on_points", "on_failures", "off_points", "off_failures",
                "unclassified", "max_on_normalized", "min_off_normalized",
            ],
            "properties": {
                "on_points": {"type": "integer"},
                "on_failures": {"type": "integer"},
                "off_points": {"type": "integer"},
                "off_failures": {"type": "integer"},
                "unclassified": {"type": "integer"},
                "max_on_normalized": _NULLABLE_NUMBER,
                "min_off_normalized": _NULLABLE_NUMBER,
            },
        },
        "sampling_failed": {"type": "boolean"},
        "notes": {"type": "array", "items": {"type": "string"}},
        "config": {"type": "object"},
        "points": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["location", "role", "indicator", "normalized", "verdict", "widened"],
                "properties": {
                    "location": FLOAT_LIST,
                    "role": {"enum": ["on", "off", "unclassified"]},
                    "indicator": {"type": "number"},
                    "normalized": {"type": "number"},
                    "verdict": {"enum": ["Stationary", "NotStationary"]},
                    "widened": {"type": "boolean"},
                },
            },
        },
    },
}

DECOMPOSITION = {
    "type": "object",
    "additionalProperties": False,
    "required": ["degree", "components"],
    "properties": {
        "degree": {"type": "integer"},
        "components": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["degree", "harmonic"],
                "properties": {"degree": {"type": "integer"}, "harmonic": POLYNOMIAL},
            },
        },
    },
}

WITNESS = {
    "type": "object",
    "additionalProperties": False,
    "required": ["status", "max_degree"],
    "properties": {
        "status": {"enum": ["Found", "NotFoundUpTo"]},
        "quotient": POLYNOMIAL,
        "max_degree": {"type": "integer"},
    },
}

DIVISOR = {
    "type": "object",
    "additionalProperties": False,
    "required": ["divides_all_laplacians", "chain", "harmonic_multiple"],
    "properties": {
        "divides_all_laplacians": {"type": "boolean"},
        "failed_at": {"type": "integer"},
        "chain": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["laplacian_power", "laplacian", "quotient"],
                "properties": {
                    "laplacian_power": {"type": "integer"},
                    "laplacian": POLYNOMIAL,
                    "quotient": {"anyOf": [{"type": "null"}, POLYNOMIAL]},
                },
            },
        },
        "harmonic_multiple": {"anyOf": [{"type": "null"}, WITNESS]},
    },
}

CLOSURE = {
    "type": "object",
    "additionalProperties": False,
    "required": ["status", "hyperplanes"],
    "properties": {
        "status": {"enum": ["Closed", "ExceededBound"]},
        "hyperplanes": {"type": "array", "items": HYPERPLANE},
        "group_order_bound": {"type": ["integer", "null"]},
        "common_point": {"anyOf": [{"type": "null"}, FLOAT_LIST]},
    },
}

HYPERPLANE_LIST = {
    "anyOf": [
        {"type": "array", "items": HYPERPLANE},
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["hyperplanes"],
            "properties": {"hyperplanes": {"type": "array", "items": HYPERPLANE}},
        },
    ]
}


def validate(document, schema: dict) -> None:
    """Raise ``jsonschema.ValidationError`` when ``document`` does not match."""
    jsonschema.validate(document, schema)
