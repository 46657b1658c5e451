#include "forge/service.hpp"

namespace forge::service {

namespace {

constexpr const char* kJob = R"({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "Job",
  "type": "object",
  "required": ["id", "stages", "state", "progress", "log", "failed_stage", "error", "stage_status"],
  "properties": {
    "id": {"type": "string"},
    "stages": {"type": "array", "items": {"enum": ["all", "generate", "download", "convert", "clean", "extract"]}},
    "state": {"enum": ["Queued", "Running", "Done", "Failed"]},
    "progress": {
      "type": "object",
      "additionalProperties": {
        "type": "object",
        "required": ["done", "total"],
        "properties": {"done": {"type": "integer", "minimum": 0}, "total": {"type": "integer", "minimum": 0}}
      }
    },
    "log": {"type": "array", "items": {"type": "string"}},
    "failed_stage": {"type": ["string", "null"]},
    "error": {"type": ["string", "null"]},
    "stage_status": {
      "type": "object",
      "additionalProperties": {"enum": ["NotRun", "Running", "Done", "Failed"]}
    }
  }
})";

constexpr const char* kJobRef = R"({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "JobRef",
  "type": "object",
  "required": ["job_id", "state"],
  "properties": {"job_id": {"type": "string"}, "state": {"enum": ["Queued", "Running", "Done", "Failed"]}}
})";

constexpr const char* kConfig = R"({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "Config",
  "type": "object",
  "required": ["sampler", "download", "convert", "clean", "extract", "service", "output"],
  "additionalProperties": {"type": "object", "additionalProperties": {"type": "string"}}
})";

constexpr const char* kScenes = R"({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "Scenes",
  "type": "array",
  "items": {
    "type": "object",
    "required": ["scene_id", "lat", "lon", "months_done", "unfavorable_count", "previews"],
    "properties": {
      "scene_id": {"type": "integer", "minimum": 0},
      "lat": {"type": "number", "minimum": -90, "maximum": 90},
      "lon": {"type": "number", "minimum": -180, "maximum": 180},
      "months_done": {"type": "integer", "minimum": 0},
      "unfavorable_count": {"type": "integer", "minimum": 0},
      "previews": {"type": "object", "additionalProperties": {"type": "string"}}
    }
  }
})";

constexpr const char* kScene = R"({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "Scene",
  "type": "object",
  "required": ["scene_id", "center", "months"],
  "definitions": {
    "report": {
      "type": ["object", "null"],
      "required": ["missing_fraction", "cloud_fraction", "score", "verdict", "thresholds_used"],
      "properties": {
        "missing_fraction": {"type": "number", "minimum": 0, "maximum": 1},
        "cloud_fraction": {"type": "number", "minimum": 0, "maximum": 1},
        "score": {"type": "number", "minimum": 0},
        "verdict": {"enum": ["Pass", "Fail"]}
      }
    },
    "candidate": {
      "type": "object",
      "required": ["item_id", "rank", "product_id", "acquired_at", "raw_path", "image_path", "report", "decision", "decided_by"],
      "properties": {
        "item_id": {"type": "string"},
        "rank": {"type": "integer", "minimum": 0},
        "product_id": {"type": "string"},
        "acquired_at": {"type": "string"},
        "raw_path": {"type": "string"},
        "image_path": {"type": ["string", "null"]},
        "report": {"$ref": "#/definitions/report"},
        "decision": {"enum": ["Keep", "Discard", "Pending"]},
        "decided_by": {"enum": ["Auto", "Human"]}
      }
    }
  },
  "properties": {
    "scene_id": {"type": "integer", "minimum": 0},
    "center": {
      "type": "object",
      "required": ["lat", "lon"],
      "properties": {"lat": {"type": "number"}, "lon": {"type": "number"}}
    },
    "months": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["month", "satellites"],
        "properties": {
          "month": {"type": "string", "pattern": "^[0-9]{4}-[0-9]{2}$"},
          "satellites": {
            "type": "object",
            "additionalProperties": {
              "type": "object",
              "required": ["candidates", "selected", "unfavorable"],
              "properties": {
                "candidates": {"type": "array", "items": {"$ref": "#/definitions/candidate"}},
                "selected": {"type": ["string", "null"]},
                "unfavorable": {"type": "boolean"}
              }
            }
          }
        }
      }
    }
  }
})";

constexpr const char* kGeoJson = R"({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "PointsGeoJSON",
  "type": "object",
  "required": ["type", "features"],
  "properties": {
    "type": {"const": "FeatureCollection"},
    "features": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["type", "geometry", "properties"],
        "properties": {
          "type": {"const": "Feature"},
          "geometry": {
            "type": "object",
            "required": ["type", "coordinates"],
            "properties": {
              "type": {"const": "Point"},
              "coordinates": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
            }
          },
          "properties": {
            "type": "object",
            "required": ["scene_id", "months_done", "unfavorable_count"],
            "properties": {
              "scene_id": {"type": "integer", "minimum": 0},
              "months_done": {"type": "integer", "minimum": 0},
              "unfavorable_count": {"type": "integer", "minimum": 0}
            }
          }
        }
      }
    }
  }
})";

constexpr const char* kReviewItem = R"({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "ReviewItem",
  "type": "object",
  "required": ["item_id", "satellite", "scene_id", "month", "rank", "image_path", "image_url", "report", "decision", "decided_by"],
  "properties": {
    "item_id": {"type": "string", "pattern": "^S[12]-[0-9]{4,}-[0-9]{4}-[0-9]{2}-[0-9]+$"},
    "satellite": {"enum": ["S1", "S2"]},
    "scene_id": {"type": "integer", "minimum": 0},
    "month": {"type": "string", "pattern": "^[0-9]{4}-[0-9]{2}$"},
    "rank": {"type": "integer", "minimum": 0},
    "image_path": {"type": "string"},
    "image_url": {"type": "string"},
    "report": {"type": ["object", "null"]},
    "decision": {"enum": ["Keep", "Discard", "Pending"]},
    "decided_by": {"enum": ["Auto", "Human"]}
  }
})";

constexpr const char* kReviewItems = R"({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "ReviewItems",
  "type": "array",
  "items": {"type": "object", "required": ["item_id", "decision"]}
})";

constexpr const char* kError = R"({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "Error",
  "type": "object",
  "required": ["error"],
  "properties": {
    "error": {
      "type": "object",
      "required": ["code", "message"],
      "properties": {"code": {"type": "string"}, "message": {"type": "string"}}
    }
  }
})";

}  // namespace

const std::map<std::string, std::string>& api_schemas() {
  static const std::map<std::string, std::string> schemas = {
      {"job", kJob},         {"job_ref", kJobRef},         {"config", kConfig},
      {"scenes", kScenes},   {"scene", kScene},            {"geojson", kGeoJson},
      {"review_item", kReviewItem}, {"review_items", kReviewItems}, {"error", kError},
  };
  return schemas;
}

}  // namespace forge::service
