#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hierflow/date.hpp"
#include "hierflow/hierarchy.hpp"

namespace hierflow {

// Missing values are std::monostate.
using AttributeValue = std::variant<std::monostate, double, std::string>;

enum class AttributeKind { Numeric, Categorical };

struct AttributeColumn {
  std::string name;
  AttributeKind kind = AttributeKind::Categorical;
  bool operator==(const AttributeColumn&) const = default;
};

struct Event {
  NodeId type = 0;
  Day day;
  auto operator<=>(const Event& other) const {
    if (auto c = day <=> other.day; c != 0) return c;
    return type <=> other.type;
  }
  bool operator==(const Event&) const = default;
};

struct EntityRecord {
  std::string id;
  std::vector<AttributeValue> attributes;  // aligned with Dataset::attributes
  std::vector<Event> events;               // sorted by (day, type)
  bool operator==(const EntityRecord&) const = default;
};

struct DatasetInfo {
  std::string dataset_id;
  std::size_t entity_count = 0;
  std::size_t event_count = 0;
  std::size_t node_count = 0;
  std::size_t attribute_count = 0;
  std::string ingested_at;  // ISO-8601 UTC
};

class Dataset {
 public:
  DatasetInfo info;
  std::shared_ptr<const TypeHierarchy> hierarchy;
  std::vector<AttributeColumn> attributes;
  std::vector<EntityRecord> entities;

  const std::string& id() const { return info.dataset_id; }
  const TypeHierarchy& types() const { return *hierarchy; }
  std::size_t event_count() const;
  std::optional<std::size_t> attribute_index(std::string_view name) const;

  // Entities, attributes, hierarchy and events compare equal; ingest metadata
  // is ignored.
  bool same_content(const Dataset& other) const;
};

using DatasetHandle = std::shared_ptr<const Dataset>;

// Inputs for ingest: each source is either a path or an embedded payload.
struct DatasetManifest {
  std::string dataset_id;  // derived from a content hash when empty
  std::optional<std::filesystem::path> events_path;
  std::optional<std::filesystem::path> hierarchy_path;
  std::optional<std::filesystem::path> attributes_path;
  std::optional<std::string> events_text;
  std::optional<std::string> hierarchy_text;
  std::optional<std::string> attributes_text;
};

// Parses and validates the sources. Events file columns:
// entity_id,type_code,timestamp. Attributes file: entity_id plus one column per
// attribute. Errors: ParseError, UnknownTypeCode, EmptyDataset,
// EntityWithoutEvents.
DatasetHandle ingest(const DatasetManifest& manifest);

DatasetHandle ingest_streams(std::istream& events, std::istream& hierarchy,
                             std::istream* attributes, std::string dataset_id = {});

// Builds a dataset from already-resolved parts; sorts each entity's events
// and validates the zero-event rule.
DatasetHandle make_dataset(std::shared_ptr<const TypeHierarchy> hierarchy,
                           std::vector<AttributeColumn> attributes,
                           std::vector<EntityRecord> entities, std::string dataset_id = {});

void write_events_csv(std::ostream& out, const Dataset& dataset);
void write_attributes_csv(std::ostream& out, const Dataset& dataset);

// Snapshot directory: manifest.json, hierarchy.csv, entities.csv and three
// little-endian binary event columns. Saving a loaded snapshot reproduces the
// original bytes.
void save_snapshot(const Dataset& dataset, const std::filesystem::path& dir);
DatasetHandle load_snapshot(const std::filesystem::path& dir);

std::uint64_t content_hash(const Dataset& dataset);

std::string format_attribute(const AttributeValue& value);

}  // namespace hierflow
