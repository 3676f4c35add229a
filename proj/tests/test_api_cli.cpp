#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <unistd.h>

#include <httplib.h>

#include "hierflow/api/server.hpp"
#include "hierflow/api/service.hpp"
#include "hierflow/fixtures.hpp"
#include "toy.hpp"

using namespace hierflow;
using namespace hierflow::api;
using toy::code_of;
namespace fs = std::filesystem;

namespace {

const DatasetHandle& use_case() {
  static const DatasetHandle d = fixtures::use_case_dataset();
  return d;
}

std::string open_use_case(Service& s) {
  s.add_dataset(use_case());
  return s.query("use-case", fixtures::use_case_query()).at("cohort_id").get<std::string>();
}

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("hierflow_api_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Run {
  int status;
  std::string out;
};

ServiceConfig stored_at(const fs::path& dir) {
  ServiceConfig c;
  c.data_dir = dir;
  return c;
}

Run run_cli(const std::string& args) {
  const std::string cmd = std::string(HIERFLOW_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int rc = ::pclose(pipe);
  return {WEXITSTATUS(rc), out};
}

Json cli_json(const std::string& args) {
  const auto r = run_cli(args);
  INFO(args << "\n" << r.out);
  REQUIRE(r.status == 0);
  return Json::parse(r.out);
}

}  // namespace

TEST_CASE("service: query, selection, scatter and focus") {
  Service s;
  const auto c = open_use_case(s);
  const auto cohort = s.cohort(c);
  CHECK(cohort->size() == 1732);
  CHECK(s.session(c).selection == "whole");

  const auto sel = s.select(c, "e0", 0.0);
  CHECK(sel.at("selection") == "edge:e0");
  const auto a = s.scatter(c, 0.5).dump();
  const auto b = s.scatter(c, 0.5).dump();
  CHECK(a == b);
  CHECK(s.cache_hits() > 0);

  const auto sc = s.scatter(c);
  CHECK(sc.at("selection") == "edge:e0");
  bool nicotine = false;
  for (const auto& m : sc.at("marks")) {
    if (m.at("code") == fixtures::kNicotine) {
      nicotine = true;
      CHECK(m.at("seq_count") == 360);
    }
  }
  CHECK(nicotine);

  const auto f = s.focus(c, fixtures::kNicotine);
  CHECK(f.at("focus").at("code") == fixtures::kNicotine);
  CHECK(f.at("ancestors").size() == 2);
  CHECK(code_of([&] { s.focus(c, "NOPE"); }) == ErrorCode::UnknownCode);
  CHECK(code_of([&] { s.scatter("c-missing"); }) == ErrorCode::NotFound);
  CHECK(code_of([&] { s.select(c, "e0", 1.5); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { s.select(c, "e42"); }) == ErrorCode::UnknownSelection);
}

TEST_CASE("service: changing R does not mutate cohort or timeline") {
  Service s;
  const auto c = open_use_case(s);
  s.select(c, "e0");
  const auto before = s.timeline(c, true).dump();
  const auto version = s.session(c).timeline_version;
  std::vector<std::size_t> sizes;
  for (double r : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    sizes.push_back(s.cut(c, r).at("pre_filter").size());
  }
  CHECK(s.timeline(c, true).dump() == before);
  CHECK(s.session(c).timeline_version == version);
  CHECK(s.session(c).r == 0.0);
  CHECK(std::is_sorted(sizes.rbegin(), sizes.rend()));
}

TEST_CASE("service: milestones, locks, table, survival, attributes and filter") {
  Service s;
  const auto c = open_use_case(s);
  s.select(c, "e0");
  CHECK(s.lock(c, {fixtures::kNicotine}).at("locked").size() == 1);
  CHECK(code_of([&] { s.lock(c, {"NOPE"}); }) == ErrorCode::UnknownCode);
  const auto v0 = s.session(c).timeline_version;
  const auto t = s.add_milestone(c, "e0", fixtures::kSubstanceGroup);
  CHECK(t.at("version") != v0);
  CHECK(s.session(c).selection == "whole");
  CHECK(code_of([&] { s.add_milestone(c, "e0", fixtures::kSubstanceGroup); }) == ErrorCode::UnknownEdge);
  const auto sc = s.scatter(c);
  CHECK(sc.at("timeline_version") == t.at("version"));
  CHECK(sc.at("locked").size() == 1);

  s.select(c, "e1");
  const auto table = s.events_table(c, TableSort::SeqCount, false, true);
  const auto& rows = table.at("rows");
  REQUIRE(rows.size() > 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i - 1].at("seq_count").get<double>() >= rows[i].at("seq_count").get<double>());
  }
  const auto asc = s.events_table(c, TableSort::Correlation, true, true);
  for (std::size_t i = 1; i < asc.at("rows").size(); ++i) {
    CHECK(asc.at("rows")[i - 1].at("correlation").get<double>() <=
          asc.at("rows")[i].at("correlation").get<double>());
  }
  CHECK(parse_table_sort("occ_count") == TableSort::OccCount);
  CHECK(code_of([] { parse_table_sort("size"); }) == ErrorCode::InvalidArgument);

  const auto km = s.survival(c);
  CHECK(km.at("points")[0].at("s") == 1.0);
  const auto attrs = s.attributes(c);
  CHECK(attrs.at("attributes").size() == 2);

  const auto f = s.filter(c, {"age", CompareOp::Ge, {50.0}});
  const auto fc = f.at("cohort_id").get<std::string>();
  CHECK(fc != c);
  CHECK(f.at("size").get<std::size_t>() < 1732);
  CHECK(s.cohort(c)->size() == 1732);
  CHECK(s.stats_csv(fc).rfind("code,label,seq_count", 0) == 0);
}

TEST_CASE("service: datasets from manifests and a data directory") {
  const auto dir = temp_dir("data");
  {
    Service s(stored_at(dir / "store"));
    Json m{{"dataset_id", "tiny"},
           {"hierarchy", "code,parent,label\nROOT,,\nA,ROOT,\nB,ROOT,\n"},
           {"events", "entity_id,type_code,timestamp\np,A,2020-01-01\nq,B,2020-01-02\n"}};
    const auto j = s.add_dataset(m);
    CHECK(j.at("dataset_id") == "tiny");
    CHECK(j.at("entities") == 2);
    CHECK(code_of([&] { s.add_dataset(Json::array()); }) == ErrorCode::InvalidArgument);
  }
  Service reloaded(stored_at(dir / "store"));
  CHECK(reloaded.datasets().size() == 1);
  CHECK(reloaded.dataset("tiny")->entities.size() == 2);
  CHECK(code_of([&] { reloaded.dataset("nope"); }) == ErrorCode::NotFound);

  std::ofstream(dir / "file") << "x";
  CHECK(code_of([&] { Service bad(stored_at(dir / "file")); }) == ErrorCode::BadConfig);
  fs::remove_all(dir);
}

TEST_CASE("http: endpoints over a live socket") {
  const auto dir = temp_dir("http");
  save_snapshot(*use_case(), dir / "use-case");

  ServerConfig config;
  config.port = 0;
  Server server(config);
  const int port = server.bind();
  std::thread thread([&] { server.listen(); });
  httplib::Client cli("127.0.0.1", port);

  auto post = [&](const std::string& path, const Json& body) {
    auto r = cli.Post(path, body.dump(), "application/json");
    REQUIRE(r);
    return r;
  };
  auto get = [&](const std::string& path) {
    auto r = cli.Get(path);
    REQUIRE(r);
    return r;
  };

  CHECK(get("/health")->status == 200);
  auto r = post("/datasets", {{"snapshot", (dir / "use-case").string()}});
  CHECK(r->status == 201);
  CHECK(Json::parse(r->body).at("entities") == 2500);
  CHECK(Json::parse(get("/datasets")->body).size() == 1);

  r = post("/datasets/use-case/query", Json::parse(to_json(fixtures::use_case_query())));
  CHECK(r->status == 201);
  const auto cohort = Json::parse(r->body);
  CHECK(cohort.at("size") == 1732);
  CHECK(cohort.at("positives") == 121);
  const std::string c = "/cohorts/" + cohort.at("cohort_id").get<std::string>();

  auto timeline = Json::parse(get(c + "/timeline")->body);
  CHECK(timeline.at("edges").size() == 2);
  CHECK_FALSE(timeline.at("edges")[0].contains("member_ids"));
  CHECK(Json::parse(get(c + "/timeline?detail=1")->body).at("edges")[0].contains("member_ids"));

  r = post(c + "/selection", {{"edge", "e0"}});
  CHECK(r->status == 200);
  CHECK(Json::parse(r->body).at("selection") == "edge:e0");

  const auto s1 = get(c + "/scatter?R=0.5");
  const auto s2 = get(c + "/scatter?R=0.5");
  CHECK(s1->status == 200);
  CHECK(s1->body == s2->body);
  const auto scatter = Json::parse(s1->body);
  CHECK(scatter.contains("hexbins"));
  CHECK(scatter.contains("x_domain"));
  CHECK(get(c + "/scatter?R=abc")->status == 400);
  CHECK(get(c + "/scatter?R=2")->status == 400);

  auto focus = get(c + "/focus/F17");
  CHECK(focus->status == 200);
  focus = get(c + "/focus/NOPE");
  CHECK(focus->status == 404);
  CHECK(Json::parse(focus->body).at("code") == "NOPE");

  CHECK(post(c + "/locks", {{"codes", {"F17"}}})->status == 200);
  r = post(c + "/milestones", {{"edge", "e0"}, {"code", "F10-F19"}});
  CHECK(r->status == 201);
  timeline = Json::parse(r->body);
  std::size_t split = 0;
  for (const auto& e : timeline.at("edges"))
    if (e.at("from") == "m0") split += e.at("members").get<std::size_t>();
  CHECK(split == 1732);
  CHECK(post(c + "/milestones", {{"edge", "e0"}, {"code", "F10-F19"}})->status == 404);
  CHECK(post(c + "/milestones", {{"edge", "e3"}, {"code", "F10-F19"}})->status == 409);
  CHECK(post(c + "/milestones", {{"edge", "e1"}})->status == 400);

  CHECK(Json::parse(get(c + "/scatter")->body).at("timeline_version") == timeline.at("version"));
  CHECK(Json::parse(get(c + "/survival")->body).at("points")[0].at("s") == 1.0);
  CHECK(get(c + "/attributes")->status == 200);
  const auto table = get(c + "/events/table?sort=occ_count&order=desc&scope=all");
  CHECK(table->status == 200);
  CHECK(Json::parse(table->body).at("sort") == "occ_count");
  CHECK(get(c + "/events/table?sort=bogus")->status == 400);
  CHECK(get(c + "/cut?R=0&format=csv")->body.rfind("code,", 0) == 0);
  r = post(c + "/filter", {{"attribute", "sex"}, {"op", "eq"}, {"value", "F"}});
  CHECK(r->status == 201);
  CHECK(get("/cohorts/c-unknown/scatter")->status == 404);
  CHECK(cli.Post("/datasets", "{not json", "application/json")->status == 400);

  // A second server cannot take the same port.
  ServerConfig clash;
  clash.port = port;
  Server other(clash);
  CHECK(code_of([&] { other.bind(); }) == ErrorCode::PortInUse);

  server.stop();
  thread.join();
  fs::remove_all(dir);
}

TEST_CASE("http: bad configuration") {
  ServerConfig c;
  c.port = 70000;
  CHECK(code_of([&] { Server s(c); }) == ErrorCode::BadConfig);
  CHECK(http_status(ErrorCode::UnknownCode) == 404);
  CHECK(http_status(ErrorCode::NoMatchingEntities) == 409);
  CHECK(http_status(ErrorCode::InvalidSpec) == 400);
}

TEST_CASE("cli: every subcommand on a small dataset") {
  const auto dir = temp_dir("cli").string();
  auto ds = cli_json("synth --preset use-case --out " + dir + "/uc --csv " + dir + "/csv");
  CHECK(ds.at("entities") == 2500);
  ds = cli_json("ingest --events " + dir + "/csv/events.csv --hierarchy " + dir +
                "/csv/hierarchy.csv --attributes " + dir + "/csv/attributes.csv --id again --out " +
                dir + "/again");
  CHECK(ds.at("events") == Json::parse(run_cli("synth --preset use-case --out " + dir + "/uc2").out).at("events"));

  const std::string s = " -s " + dir + "/s.json";
  auto cohort = cli_json("query -d " + dir + "/again --preset use-case" + s);
  CHECK(cohort.at("size") == 1732);
  auto t = cli_json("timeline" + s);
  CHECK(t.at("edges").size() == 2);
  cli_json("select --selection e0 --R 0" + s);
  const auto a = run_cli("scatter" + s).out;
  CHECK(a == run_cli("scatter" + s).out);
  CHECK(Json::parse(a).at("selection") == "edge:e0");
  CHECK(cli_json("cut --R 0.25" + s).at("r") == 0.25);
  CHECK(run_cli("cut --format csv" + s).out.rfind("code,", 0) == 0);
  CHECK(cli_json("focus F17" + s).at("focus").at("code") == "F17");
  const auto bad = run_cli("focus NOPE" + s);
  CHECK(bad.status != 0);
  CHECK(bad.out.find("UnknownCode") != std::string::npos);
  cli_json("lock F17 PX.CARD.ECG" + s);
  t = cli_json("add-milestone --edge e0 --code F10-F19" + s);
  CHECK(t.at("edges").size() == 4);
  t = cli_json("timeline" + s);
  CHECK(t.at("version") == cli_json("scatter" + s).at("timeline_version"));
  CHECK(cli_json("scatter" + s).at("locked").size() == 2);
  CHECK(cli_json("survival" + s).at("points")[0].at("s") == 1.0);
  CHECK(cli_json("attributes" + s).at("size") == 1732);
  CHECK(cli_json("table --sort correlation --scope all" + s).at("sort") == "correlation");
  CHECK(run_cli("stats" + s).out.rfind("code,label", 0) == 0);
  const auto f = cli_json("filter --constraint '{\"attribute\":\"age\",\"op\":\"ge\",\"value\":50}'" + s);
  CHECK(f.at("size").get<int>() < 1732);
  CHECK(cli_json("timeline" + s).at("size") == f.at("size"));
  CHECK(run_cli("serve --port 70000").status != 0);
  CHECK(run_cli("").status != 0);
  fs::remove_all(dir);
}
