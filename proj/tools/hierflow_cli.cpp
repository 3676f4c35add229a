#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hierflow/api/server.hpp"
#include "hierflow/api/service.hpp"
#include "hierflow/error.hpp"
#include "hierflow/fixtures.hpp"
#include "hierflow/synthetic.hpp"

namespace fs = std::filesystem;
using hierflow::ErrorCode;
using hierflow::fail;
using hierflow::api::Json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

Json read_json(const fs::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

// Prints to stdout or writes to `out` when given.
void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  } else {
    write_file(out, text);
  }
}

void emit(const Json& j, const std::string& out) { emit(j.dump(2) + "\n", out); }

// A session file replays the interactive state: dataset snapshot, query,
// attribute filters, milestones, selection, R and locked codes.
struct Session {
  fs::path file;
  Json state;
  hierflow::api::Service service;
  std::string cohort_id;

  void override_selection(const std::string& selection) {
    if (!selection.empty()) service.select(cohort_id, selection);
  }

  explicit Session(const fs::path& path) : file(path), state(read_json(path)) {
    fs::path dataset = state.at("dataset").get<std::string>();
    if (dataset.is_relative()) dataset = fs::absolute(file).parent_path() / dataset;
    const std::string dataset_id = service.add_dataset(hierflow::load_snapshot(dataset));
    const auto spec = hierflow::parse_query_spec(state.at("query").dump());
    cohort_id = service.query(dataset_id, spec).at("cohort_id").get<std::string>();
    for (const auto& f : state.value("filters", Json::array())) {
      cohort_id = service.filter(cohort_id, hierflow::parse_attribute_constraint(f.dump()))
                      .at("cohort_id")
                      .get<std::string>();
    }
    for (const auto& m : state.value("milestones", Json::array())) {
      service.add_milestone(cohort_id, m.at("edge").get<std::string>(),
                            m.at("code").get<std::string>());
    }
    service.select(cohort_id, state.value("selection", std::string("whole")),
                   state.value("r", 0.0));
    service.lock(cohort_id, state.value("locked", std::vector<std::string>{}));
  }

  void save() const { write_file(file, state.dump(2) + "\n"); }
};

hierflow::DatasetHandle preset_dataset(const std::string& name) {
  if (name == "heart-failure") return hierflow::fixtures::heart_failure_dataset();
  if (name == "use-case") return hierflow::fixtures::use_case_dataset();
  if (name == "aggregation-trend") return hierflow::generate_synthetic(hierflow::aggregation_trend_spec());
  if (name == "largest-query") return hierflow::generate_synthetic(hierflow::largest_query_spec());
  fail(ErrorCode::InvalidArgument, "unknown preset '" + name + "'");
}

std::string preset_query(const std::string& name) {
  if (name == "heart-failure") return hierflow::to_json(hierflow::fixtures::heart_failure_query());
  if (name == "use-case") return hierflow::to_json(hierflow::fixtures::use_case_query());
  fail(ErrorCode::InvalidArgument, "unknown query preset '" + name + "'");
}

hierflow::api::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cohort event-sequence analysis over event-type hierarchies"};
  app.require_subcommand(1);
  std::string out;
  std::string session_path;
  std::string selection;
  std::optional<double> r;

  auto add_session = [&](CLI::App* cmd) {
    cmd->add_option("--session,--cohort,-s", session_path, "Session file written by `query`")->required();
  };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse CSV files into a dataset snapshot");
  std::string events, hierarchy, attributes, dataset_id;
  ingest->add_option("--events", events, "entity_id,type_code,timestamp")->required();
  ingest->add_option("--hierarchy", hierarchy, "code,parent,label")->required();
  ingest->add_option("--attributes", attributes, "entity_id plus attribute columns");
  ingest->add_option("--id", dataset_id, "Dataset id (content hash when omitted)");
  ingest->add_option("--out", out, "Snapshot directory")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset snapshot");
  std::string spec_file, preset, csv_dir;
  auto* spec_opt = synth->add_option("--spec", spec_file, "Synthetic spec JSON file");
  synth->add_option("--preset", preset,
                    "heart-failure | use-case | aggregation-trend | largest-query")
      ->excludes(spec_opt);
  synth->add_option("--out", out, "Snapshot directory")->required();
  synth->add_option("--csv", csv_dir, "Also write hierarchy/events/attributes CSVs here");

  // query
  auto* query = app.add_subcommand("query", "Run a cohort query and start a session file");
  std::string dataset_dir, query_file, query_json, query_preset;
  query->add_option("--dataset,-d", dataset_dir, "Snapshot directory")->required();
  auto* qf = query->add_option("--spec", query_file, "Query spec JSON file");
  auto* qj = query->add_option("--json", query_json, "Inline query spec JSON")->excludes(qf);
  query->add_option("--preset", query_preset, "heart-failure | use-case")->excludes(qf)->excludes(qj);
  query->add_option("--session,-s", session_path, "Session file to create")->required();

  auto* filter = app.add_subcommand("filter", "Restrict the session cohort by an attribute");
  std::string constraint;
  add_session(filter);
  filter->add_option("--constraint", constraint,
                     R"({"attribute":"age","op":"ge","value":50})")
      ->required();

  auto* timeline = app.add_subcommand("timeline", "Print the timeline model");
  bool detail = false;
  add_session(timeline);
  timeline->add_flag("--detail", detail, "Include member entity ids");
  timeline->add_option("--out,-o", out);

  auto* select = app.add_subcommand("select", "Set the analytic selection and R");
  add_session(select);
  select->add_option("--selection", selection, "whole | <milestone id> | <edge id>");
  select->add_option("--R,--r,-r", r, "Simplification level in [0, 1]");

  auto* add_milestone = app.add_subcommand("add-milestone", "Split an edge at an event type");
  std::string edge, code;
  add_session(add_milestone);
  add_milestone->add_option("--edge", edge)->required();
  add_milestone->add_option("--code", code)->required();
  add_milestone->add_option("--out,-o", out);

  auto* lock = app.add_subcommand("lock", "Set the locked event types");
  std::vector<std::string> codes;
  add_session(lock);
  lock->add_option("codes", codes);

  auto* scatter = app.add_subcommand("scatter", "Scatter payload for the current selection");
  add_session(scatter);
  scatter->add_option("--selection", selection, "Override the session selection");
  scatter->add_option("--R,--r,-r", r, "Simplification level in [0, 1]");
  scatter->add_option("--out,-o", out);

  auto* cut = app.add_subcommand("cut", "Informative cut for the current selection");
  std::string format = "json";
  add_session(cut);
  cut->add_option("--selection", selection, "Override the session selection");
  cut->add_option("--R,--r,-r", r, "Simplification level in [0, 1]");
  cut->add_option("--format", format)->check(CLI::IsMember({"json", "csv"}));
  cut->add_option("--out,-o", out);

  auto* focus = app.add_subcommand("focus", "Focus layout for an event type");
  add_session(focus);
  focus->add_option("--selection", selection, "Override the session selection");
  focus->add_option("code", code)->required();
  focus->add_option("--out,-o", out);

  auto* survival = app.add_subcommand("survival", "Kaplan-Meier curve of the cohort");
  add_session(survival);
  survival->add_option("--out,-o", out);

  auto* attrs = app.add_subcommand("attributes", "Attribute distributions of the cohort");
  add_session(attrs);
  attrs->add_option("--out,-o", out);

  auto* table = app.add_subcommand("table", "Event table for the current selection");
  std::string sort = "seq_count", order = "desc", scope = "cut";
  add_session(table);
  table->add_option("--selection", selection, "Override the session selection");
  table->add_option("--sort", sort)->check(CLI::IsMember({"seq_count", "occ_count", "correlation"}));
  table->add_option("--order", order)->check(CLI::IsMember({"asc", "desc"}));
  table->add_option("--scope", scope)->check(CLI::IsMember({"cut", "all"}));
  table->add_option("--out,-o", out);

  auto* stats = app.add_subcommand("stats", "Statistics for every event type as CSV");
  add_session(stats);
  stats->add_option("--out,-o", out);

  auto* serve = app.add_subcommand("serve", "Run the HTTP JSON service");
  hierflow::api::ServerConfig server_config;
  std::string data_dir;
  std::vector<std::string> load;
  serve->add_option("--host", server_config.host);
  serve->add_option("--port", server_config.port, "0 picks a free port");
  serve->add_option("--data-dir", data_dir, "Snapshots loaded at start; new datasets saved here");
  serve->add_option("--cache-size", server_config.service.cache_size);
  serve->add_option("--dataset", load, "Extra snapshot directories to load");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      hierflow::DatasetManifest m;
      m.dataset_id = dataset_id;
      m.events_path = events;
      m.hierarchy_path = hierarchy;
      if (!attributes.empty()) m.attributes_path = attributes;
      auto ds = hierflow::ingest(m);
      hierflow::save_snapshot(*ds, out);
      emit(hierflow::api::dataset_json(*ds), "");
    } else if (*synth) {
      hierflow::DatasetHandle ds;
      if (!spec_file.empty()) {
        ds = hierflow::generate_synthetic(hierflow::parse_synthetic_spec(read_file(spec_file)));
      } else if (!preset.empty()) {
        ds = preset_dataset(preset);
      } else {
        fail(ErrorCode::InvalidArgument, "synth needs --spec or --preset");
      }
      hierflow::save_snapshot(*ds, out);
      if (!csv_dir.empty()) {
        fs::create_directories(csv_dir);
        std::ofstream h(fs::path(csv_dir) / "hierarchy.csv"), e(fs::path(csv_dir) / "events.csv"),
            a(fs::path(csv_dir) / "attributes.csv");
        hierflow::write_hierarchy_csv(h, ds->types());
        hierflow::write_events_csv(e, *ds);
        hierflow::write_attributes_csv(a, *ds);
      }
      emit(hierflow::api::dataset_json(*ds), "");
    } else if (*query) {
      std::string text = query_json;
      if (!query_file.empty()) text = read_file(query_file);
      if (!query_preset.empty()) text = preset_query(query_preset);
      if (text.empty()) fail(ErrorCode::InvalidArgument, "query needs --spec, --json or --preset");
      const auto spec = hierflow::parse_query_spec(text);
      Json state{{"dataset", fs::absolute(dataset_dir).string()},
                 {"query", Json::parse(hierflow::to_json(spec))},
                 {"filters", Json::array()},
                 {"milestones", Json::array()},
                 {"selection", "whole"},
                 {"r", 0.0},
                 {"locked", Json::array()}};
      write_file(session_path, state.dump(2) + "\n");
      Session s(session_path);
      Json j = hierflow::api::cohort_json(*s.service.cohort(s.cohort_id));
      j["timeline_version"] = s.service.session(s.cohort_id).timeline_version;
      emit(j, "");
    } else if (*filter) {
      Session s(session_path);
      const auto c = hierflow::parse_attribute_constraint(constraint);
      Json j = s.service.filter(s.cohort_id, c);
      s.state["filters"].push_back(Json::parse(hierflow::to_json(c)));
      s.state["milestones"] = Json::array();
      s.state["selection"] = "whole";
      s.save();
      emit(j, "");
    } else if (*timeline) {
      Session s(session_path);
      emit(s.service.timeline(s.cohort_id, detail), out);
    } else if (*select) {
      Session s(session_path);
      Json j = s.service.select(s.cohort_id, selection.empty() ? s.state.value("selection", std::string("whole")) : selection, r);
      s.state["selection"] = j.at("selection");
      s.state["r"] = j.at("r");
      s.save();
      emit(j, "");
    } else if (*add_milestone) {
      Session s(session_path);
      Json j = s.service.add_milestone(s.cohort_id, edge, code);
      s.state["milestones"].push_back({{"edge", edge}, {"code", code}});
      s.state["selection"] = j.at("selection");
      s.save();
      emit(j, out);
    } else if (*lock) {
      Session s(session_path);
      Json j = s.service.lock(s.cohort_id, codes);
      s.state["locked"] = j.at("locked");
      s.save();
      emit(j, "");
    } else if (*scatter) {
      Session s(session_path);
      s.override_selection(selection);
      emit(s.service.scatter(s.cohort_id, r), out);
    } else if (*cut) {
      Session s(session_path);
      s.override_selection(selection);
      if (format == "csv") emit(s.service.cut_csv(s.cohort_id, r), out);
      else emit(s.service.cut(s.cohort_id, r), out);
    } else if (*focus) {
      Session s(session_path);
      s.override_selection(selection);
      emit(s.service.focus(s.cohort_id, code), out);
    } else if (*survival) {
      Session s(session_path);
      emit(s.service.survival(s.cohort_id), out);
    } else if (*attrs) {
      Session s(session_path);
      emit(s.service.attributes(s.cohort_id), out);
    } else if (*table) {
      Session s(session_path);
      s.override_selection(selection);
      emit(s.service.events_table(s.cohort_id, hierflow::api::parse_table_sort(sort),
                                  order == "asc", scope == "all"),
           out);
    } else if (*stats) {
      Session s(session_path);
      emit(s.service.stats_csv(s.cohort_id), out);
    } else if (*serve) {
      server_config.service.data_dir = data_dir;
      hierflow::api::Server server(server_config);
      for (const auto& d : load) server.service().add_dataset(hierflow::load_snapshot(d));
      const int port = server.bind();
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on " << server_config.host << ":" << port << std::endl;
      server.listen();
      g_server = nullptr;
    }
  } catch (const hierflow::Error& e) {
    std::cerr << "error: " << hierflow::to_string(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
