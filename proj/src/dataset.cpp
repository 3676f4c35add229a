#include "hierflow/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "hierflow/csv.hpp"
#include "hierflow/error.hpp"
#include "hierflow/hash.hpp"

namespace hierflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kFormat = "hierflow-snapshot";
constexpr int kFormatVersion = 1;

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string now_iso() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

template <typename T>
void append_le(std::string& out, T value) {
  auto u = static_cast<std::make_unsigned_t<T>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

template <typename T>
std::vector<T> decode_le(const std::string& bytes, const fs::path& path) {
  if (bytes.size() % sizeof(T) != 0) {
    fail(ErrorCode::ParseError, "truncated column file '" + path.string() + "'");
  }
  std::vector<T> out(bytes.size() / sizeof(T));
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(
               static_cast<unsigned char>(bytes[k * sizeof(T) + i]))
           << (8 * i);
    }
    out[k] = static_cast<T>(u);
  }
  return out;
}

struct AttributeTable {
  std::vector<AttributeColumn> columns;
  std::unordered_map<std::string, std::vector<AttributeValue>> rows;
  std::vector<std::string> order;
};

AttributeTable read_attributes(std::istream& in) {
  csv::Reader reader(in);
  AttributeTable table;
  auto header = reader.next();
  if (!header || header->empty()) return table;
  std::vector<std::vector<std::string>> raw;
  while (auto row = reader.next()) {
    if (row->size() != header->size()) {
      fail(ErrorCode::ParseError, "attributes row " + std::to_string(reader.line()) + ": expected " +
                                      std::to_string(header->size()) + " fields");
    }
    raw.push_back(std::move(*row));
  }
  const std::size_t ncols = header->size() - 1;
  for (std::size_t c = 0; c < ncols; ++c) {
    bool numeric = true;
    for (const auto& r : raw) {
      if (!r[c + 1].empty() && !parse_number(r[c + 1])) {
        numeric = false;
        break;
      }
    }
    table.columns.push_back(
        {(*header)[c + 1], numeric ? AttributeKind::Numeric : AttributeKind::Categorical});
  }
  for (auto& r : raw) {
    std::vector<AttributeValue> values(ncols);
    for (std::size_t c = 0; c < ncols; ++c) {
      const std::string& cell = r[c + 1];
      if (cell.empty()) continue;
      if (table.columns[c].kind == AttributeKind::Numeric) {
        values[c] = *parse_number(cell);
      } else {
        values[c] = cell;
      }
    }
    if (!table.rows.emplace(r[0], std::move(values)).second) {
      fail(ErrorCode::ParseError, "duplicate attribute row for entity '" + r[0] + "'");
    }
    table.order.push_back(r[0]);
  }
  return table;
}

}  // namespace

std::string format_attribute(const AttributeValue& value) {
  if (std::holds_alternative<std::monostate>(value)) return {};
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), std::get<double>(value));
  return std::string(buf.data(), ptr);
}

std::size_t Dataset::event_count() const {
  std::size_t n = 0;
  for (const auto& e : entities) n += e.events.size();
  return n;
}

std::optional<std::size_t> Dataset::attribute_index(std::string_view name) const {
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    if (attributes[i].name == name) return i;
  }
  return std::nullopt;
}

bool Dataset::same_content(const Dataset& other) const {
  return *hierarchy == *other.hierarchy && attributes == other.attributes &&
         entities == other.entities;
}

std::uint64_t content_hash(const Dataset& d) {
  Fnv1a h;
  for (const auto& e : d.types().edges()) h.str(e.code).str(e.parent).str(e.label);
  for (const auto& a : d.attributes) h.str(a.name).u8(static_cast<unsigned char>(a.kind));
  for (const auto& ent : d.entities) {
    h.str(ent.id);
    for (const auto& v : ent.attributes) h.str(format_attribute(v));
    h.u64(ent.events.size());
    for (const auto& ev : ent.events) h.u64(ev.type).u64(static_cast<std::uint32_t>(ev.day.value));
  }
  return h.value();
}

DatasetHandle make_dataset(std::shared_ptr<const TypeHierarchy> hierarchy,
                           std::vector<AttributeColumn> attributes,
                           std::vector<EntityRecord> entities, std::string dataset_id) {
  if (entities.empty()) fail(ErrorCode::EmptyDataset, "dataset has no entities");
  auto d = std::make_shared<Dataset>();
  d->hierarchy = std::move(hierarchy);
  d->attributes = std::move(attributes);
  d->entities = std::move(entities);
  for (auto& e : d->entities) {
    if (e.events.empty()) {
      fail(ErrorCode::EntityWithoutEvents, "entity '" + e.id + "' has no events");
    }
    e.attributes.resize(d->attributes.size());
    std::sort(e.events.begin(), e.events.end());
  }
  d->info.dataset_id =
      dataset_id.empty() ? hex_id("ds-", content_hash(*d)) : std::move(dataset_id);
  d->info.entity_count = d->entities.size();
  d->info.event_count = d->event_count();
  d->info.node_count = d->hierarchy->size();
  d->info.attribute_count = d->attributes.size();
  d->info.ingested_at = now_iso();
  return d;
}

DatasetHandle ingest_streams(std::istream& events, std::istream& hierarchy_in,
                             std::istream* attributes_in, std::string dataset_id) {
  auto hierarchy = std::make_shared<const TypeHierarchy>(
      build_hierarchy(read_hierarchy_csv(hierarchy_in)));

  std::vector<EntityRecord> entities;
  std::unordered_map<std::string, std::size_t> by_id;
  csv::Reader reader(events);
  bool first = true;
  while (auto row = reader.next()) {
    if (first) {
      first = false;
      if (!row->empty() && (*row)[0] == "entity_id") continue;
    }
    const auto line = std::to_string(reader.line());
    if (row->size() != 3) {
      fail(ErrorCode::ParseError, "events row " + line + ": expected entity_id,type_code,timestamp");
    }
    if ((*row)[0].empty()) fail(ErrorCode::ParseError, "events row " + line + ": empty entity_id");
    auto type = hierarchy->find((*row)[1]);
    if (!type) {
      fail(ErrorCode::UnknownTypeCode,
           "events row " + line + ": unknown type code '" + (*row)[1] + "'");
    }
    Day day;
    try {
      day = parse_day((*row)[2]);
    } catch (const Error& e) {
      fail(ErrorCode::ParseError, "events row " + line + ": " + e.what());
    }
    auto [it, inserted] = by_id.emplace((*row)[0], entities.size());
    if (inserted) entities.push_back(EntityRecord{(*row)[0], {}, {}});
    entities[it->second].events.push_back(Event{*type, day});
  }
  if (entities.empty()) fail(ErrorCode::EmptyDataset, "events file has no rows");

  std::vector<AttributeColumn> columns;
  if (attributes_in) {
    AttributeTable table = read_attributes(*attributes_in);
    columns = table.columns;
    for (const auto& id : table.order) {
      if (!by_id.count(id)) {
        fail(ErrorCode::EntityWithoutEvents, "entity '" + id + "' has attributes but no events");
      }
    }
    for (auto& e : entities) {
      if (auto it = table.rows.find(e.id); it != table.rows.end()) e.attributes = it->second;
    }
  }
  return make_dataset(std::move(hierarchy), std::move(columns), std::move(entities),
                      std::move(dataset_id));
}

DatasetHandle ingest(const DatasetManifest& m) {
  auto source = [](const std::optional<std::string>& text,
                   const std::optional<fs::path>& path) -> std::optional<std::string> {
    if (text) return text;
    if (path) return read_file(*path);
    return std::nullopt;
  };
  auto events = source(m.events_text, m.events_path);
  auto hierarchy = source(m.hierarchy_text, m.hierarchy_path);
  auto attributes = source(m.attributes_text, m.attributes_path);
  if (!events) fail(ErrorCode::InvalidArgument, "manifest has no events source");
  if (!hierarchy) fail(ErrorCode::InvalidArgument, "manifest has no hierarchy source");
  std::istringstream ev(*events), hi(*hierarchy);
  std::optional<std::istringstream> at;
  if (attributes) at.emplace(*attributes);
  return ingest_streams(ev, hi, at ? &*at : nullptr, m.dataset_id);
}

void write_events_csv(std::ostream& out, const Dataset& d) {
  csv::write_row(out, {"entity_id", "type_code", "timestamp"});
  for (const auto& e : d.entities) {
    for (const auto& ev : e.events) {
      csv::write_row(out, {e.id, d.types().code(ev.type), format_day(ev.day)});
    }
  }
}

void write_attributes_csv(std::ostream& out, const Dataset& d) {
  std::vector<std::string> header{"entity_id"};
  for (const auto& a : d.attributes) header.push_back(a.name);
  csv::write_row(out, header);
  for (const auto& e : d.entities) {
    std::vector<std::string> row{e.id};
    for (const auto& v : e.attributes) row.push_back(format_attribute(v));
    csv::write_row(out, row);
  }
}

void save_snapshot(const Dataset& d, const fs::path& dir) {
  fs::create_directories(dir);
  std::ostringstream hier, ents;
  write_hierarchy_csv(hier, d.types());
  write_attributes_csv(ents, d);

  std::string col_entity, col_type, col_day;
  const std::size_t n_events = d.event_count();
  col_entity.reserve(n_events * 4);
  col_type.reserve(n_events * 4);
  col_day.reserve(n_events * 4);
  for (std::size_t i = 0; i < d.entities.size(); ++i) {
    for (const auto& ev : d.entities[i].events) {
      append_le(col_entity, static_cast<std::uint32_t>(i));
      append_le(col_type, static_cast<std::uint32_t>(ev.type));
      append_le(col_day, ev.day.value);
    }
  }

  json attrs = json::array();
  for (const auto& a : d.attributes) {
    attrs.push_back({{"name", a.name},
                     {"kind", a.kind == AttributeKind::Numeric ? "numeric" : "categorical"}});
  }
  json manifest = {
      {"format", kFormat},
      {"version", kFormatVersion},
      {"dataset_id", d.info.dataset_id},
      {"ingested_at", d.info.ingested_at},
      {"counts",
       {{"entities", d.entities.size()}, {"events", n_events}, {"nodes", d.types().size()}}},
      {"attributes", attrs},
      {"files",
       {{"hierarchy", "hierarchy.csv"},
        {"entities", "entities.csv"},
        {"event_entity", "events.entity.u32"},
        {"event_type", "events.type.u32"},
        {"event_day", "events.day.i32"}}},
  };
  write_file(dir / "hierarchy.csv", hier.str());
  write_file(dir / "entities.csv", ents.str());
  write_file(dir / "events.entity.u32", col_entity);
  write_file(dir / "events.type.u32", col_type);
  write_file(dir / "events.day.i32", col_day);
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

DatasetHandle load_snapshot(const fs::path& dir) {
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, "bad snapshot manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != kFormat || manifest.value("version", 0) != kFormatVersion) {
    fail(ErrorCode::ParseError, "'" + dir.string() + "' is not a supported snapshot");
  }

  std::istringstream hier(read_file(dir / "hierarchy.csv"));
  auto hierarchy = std::make_shared<const TypeHierarchy>(build_hierarchy(read_hierarchy_csv(hier)));

  auto d = std::make_shared<Dataset>();
  d->hierarchy = hierarchy;
  for (const auto& a : manifest.at("attributes")) {
    d->attributes.push_back({a.at("name").get<std::string>(),
                             a.at("kind") == "numeric" ? AttributeKind::Numeric
                                                       : AttributeKind::Categorical});
  }

  std::istringstream ents(read_file(dir / "entities.csv"));
  csv::Reader reader(ents);
  reader.next();  // header
  while (auto row = reader.next()) {
    if (row->size() != d->attributes.size() + 1) {
      fail(ErrorCode::ParseError, "entities.csv row " + std::to_string(reader.line()));
    }
    EntityRecord e{(*row)[0], std::vector<AttributeValue>(d->attributes.size()), {}};
    for (std::size_t c = 0; c < d->attributes.size(); ++c) {
      const auto& cell = (*row)[c + 1];
      if (cell.empty()) continue;
      if (d->attributes[c].kind == AttributeKind::Numeric) {
        auto v = parse_number(cell);
        if (!v) fail(ErrorCode::ParseError, "non-numeric value '" + cell + "'");
        e.attributes[c] = *v;
      } else {
        e.attributes[c] = cell;
      }
    }
    d->entities.push_back(std::move(e));
  }

  auto entity_col = decode_le<std::uint32_t>(read_file(dir / "events.entity.u32"), dir);
  auto type_col = decode_le<std::uint32_t>(read_file(dir / "events.type.u32"), dir);
  auto day_col = decode_le<std::int32_t>(read_file(dir / "events.day.i32"), dir);
  if (entity_col.size() != type_col.size() || entity_col.size() != day_col.size()) {
    fail(ErrorCode::ParseError, "event columns differ in length");
  }
  for (std::size_t k = 0; k < entity_col.size(); ++k) {
    if (entity_col[k] >= d->entities.size() || type_col[k] >= hierarchy->size()) {
      fail(ErrorCode::ParseError, "event column entry " + std::to_string(k) + " out of range");
    }
    d->entities[entity_col[k]].events.push_back(Event{type_col[k], Day{day_col[k]}});
  }
  for (const auto& e : d->entities) {
    if (e.events.empty()) fail(ErrorCode::EntityWithoutEvents, "entity '" + e.id + "' has no events");
  }

  d->info.dataset_id = manifest.at("dataset_id").get<std::string>();
  d->info.ingested_at = manifest.at("ingested_at").get<std::string>();
  d->info.entity_count = d->entities.size();
  d->info.event_count = entity_col.size();
  d->info.node_count = hierarchy->size();
  d->info.attribute_count = d->attributes.size();
  if (d->entities.empty()) fail(ErrorCode::EmptyDataset, "snapshot has no entities");
  return d;
}

}  // namespace hierflow
