#include <doctest.h>

#include <random>
#include <set>

#include "hierflow/fixtures.hpp"
#include "hierflow/query.hpp"
#include "hierflow/synthetic.hpp"
#include "hierflow/timeline.hpp"
#include "toy.hpp"

using namespace hierflow;
using toy::code_of;

namespace {

DatasetHandle order_toy() {
  return toy::dataset({{"ROOT", "", ""}, {"A", "ROOT", ""}, {"B", "ROOT", ""}, {"X", "ROOT", ""}},
                      {{"e1", {{"A", 1}, {"B", 5}, {"X", 9}}},
                       {"e2", {{"A", 2}, {"B", 1}}},
                       {"e3", {{"B", 3}}},
                       {"e4", {{"A", 4}, {"B", 6}}}});
}

DatasetHandle age_toy() {
  return toy::dataset({{"ROOT", "", ""}, {"A", "ROOT", ""}},
                      {{"p1", {{"A", 1}}, {60.0, std::string("F")}},
                       {"p2", {{"A", 1}}, {70.0, std::string("M")}},
                       {"p3", {{"A", 1}}, {80.0, std::string("F")}}},
                      {{"age", AttributeKind::Numeric}, {"sex", AttributeKind::Categorical}});
}

std::vector<std::string> member_ids(const Cohort& c) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < c.size(); ++i) ids.push_back(c.entity(i).id);
  return ids;
}

}  // namespace

TEST_CASE("execute_query: ordered inclusion and outcome after final anchor") {
  QuerySpec q;
  q.inclusion = {"A", "B"};
  q.outcome = {"X"};
  const auto c = execute_query(order_toy(), q);
  CHECK(member_ids(*c) == std::vector<std::string>{"e1", "e4"});
  CHECK(c->members[0].outcome);
  CHECK_FALSE(c->members[1].outcome);
  CHECK(c->outcome_vector() == std::vector<int>{1, 0});
  CHECK(c->members[0].anchors == std::vector<Day>{toy::day(1), toy::day(5)});
  CHECK(c->members[0].outcome_day == toy::day(9));
  CHECK_FALSE(c->empty_warning);
}

TEST_CASE("execute_query: ROOT matches every entity at its first event") {
  QuerySpec q;
  q.inclusion = {"ROOT"};
  const auto d = order_toy();
  const auto c = execute_query(d, q);
  REQUIRE(c->size() == d->entities.size());
  for (std::size_t i = 0; i < c->size(); ++i) {
    CHECK(c->members[i].anchors.front() == c->entity(i).events.front().day);
  }
}

TEST_CASE("execute_query: outcome strictly after the final anchor") {
  const auto d = toy::dataset({{"ROOT", "", ""}, {"A", "ROOT", ""}, {"X", "ROOT", ""}},
                              {{"same", {{"A", 3}, {"X", 3}}},
                               {"before", {{"X", 1}, {"A", 3}}},
                               {"between", {{"A", 1}, {"X", 2}, {"A", 4}}}});
  QuerySpec q;
  q.inclusion = {"A"};
  q.outcome = {"X"};
  auto c = execute_query(d, q);
  CHECK(c->outcome_vector() == std::vector<int>{0, 0, 1});

  q.inclusion = {"A", "A"};
  c = execute_query(d, q);
  // Only "between" has two A events; its X lies between the anchors.
  CHECK(member_ids(*c) == std::vector<std::string>{"between"});
  CHECK(c->outcome_vector() == std::vector<int>{0});
  q.outcome_window = OutcomeWindow::AfterFirstAnchor;
  c = execute_query(d, q);
  CHECK(c->outcome_vector() == std::vector<int>{1});
}

TEST_CASE("execute_query: lookback trims returned events") {
  const auto d = toy::dataset({{"ROOT", "", ""}, {"A", "ROOT", ""}, {"B", "ROOT", ""}},
                              {{"p", {{"B", 0}, {"B", 50}, {"A", 100}, {"B", 120}}}});
  QuerySpec q;
  q.inclusion = {"A"};
  q.lookback_days = 60;
  const auto c = execute_query(d, q);
  REQUIRE(c->size() == 1);
  REQUIRE(c->members[0].events.size() == 3);
  CHECK(c->members[0].events.front().day == toy::day(50));
}

TEST_CASE("execute_query: same-day inclusion anchors are allowed") {
  const auto d = toy::dataset({{"ROOT", "", ""}, {"A", "ROOT", ""}, {"B", "ROOT", ""}},
                              {{"p", {{"B", 5}, {"A", 5}}}});
  QuerySpec q;
  q.inclusion = {"A", "B"};
  CHECK(execute_query(d, q)->size() == 1);
}

TEST_CASE("execute_query: errors and empty result") {
  QuerySpec q;
  CHECK(code_of([&] { execute_query(order_toy(), q); }) == ErrorCode::InvalidSpec);
  q.inclusion = {"NOPE"};
  CHECK(code_of([&] { execute_query(order_toy(), q); }) == ErrorCode::UnknownCode);
  q.inclusion = {"A"};
  q.outcome = {"NOPE"};
  CHECK(code_of([&] { execute_query(order_toy(), q); }) == ErrorCode::UnknownCode);
  q.outcome = {};
  q.lookback_days = -1;
  CHECK(code_of([&] { execute_query(order_toy(), q); }) == ErrorCode::InvalidSpec);
  q.lookback_days = 0;
  q.attribute_constraints = {{"weight", CompareOp::Gt, {1.0}}};
  CHECK(code_of([&] { execute_query(order_toy(), q); }) == ErrorCode::UnknownAttribute);

  QuerySpec none;
  none.inclusion = {"X", "A"};
  const auto c = execute_query(order_toy(), none);
  CHECK(c->size() == 0);
  CHECK(c->empty_warning);
}

TEST_CASE("execute_query: attribute constraints") {
  QuerySpec q;
  q.inclusion = {"A"};
  q.attribute_constraints = {{"sex", CompareOp::Eq, {std::string("F")}}};
  CHECK(member_ids(*execute_query(age_toy(), q)) == std::vector<std::string>{"p1", "p3"});
  q.attribute_constraints = {{"age", CompareOp::In, {60.0, 80.0}}};
  CHECK(member_ids(*execute_query(age_toy(), q)) == std::vector<std::string>{"p1", "p3"});
  // Type mismatches never match.
  q.attribute_constraints = {{"age", CompareOp::Eq, {std::string("60")}}};
  CHECK(execute_query(age_toy(), q)->size() == 0);
}

TEST_CASE("apply_attribute_filter") {
  QuerySpec q;
  q.inclusion = {"A"};
  const auto c = execute_query(age_toy(), q);
  const auto old = c->id;

  const auto f = apply_attribute_filter(*c, {"age", CompareOp::Ge, {65.0}});
  CHECK(member_ids(*f) == std::vector<std::string>{"p2", "p3"});
  CHECK(c->size() == 3);
  CHECK(c->id == old);

  const auto all = apply_attribute_filter(*c, {"age", CompareOp::Gt, {0.0}});
  CHECK(member_ids(*all) == member_ids(*c));
  CHECK(all->id != c->id);

  const auto none = apply_attribute_filter(*c, {"age", CompareOp::Lt, {0.0}});
  CHECK(none->size() == 0);
  CHECK(none->empty_warning);

  CHECK(code_of([&] { apply_attribute_filter(*c, {"height", CompareOp::Gt, {0.0}}); }) ==
        ErrorCode::UnknownAttribute);
}

TEST_CASE("filters commute on membership") {
  SyntheticSpec s;
  s.n_entities = 600;
  s.n_event_types = 60;
  s.mean_seq_length = 8;
  s.seed = 4;
  const auto d = generate_synthetic(s);
  QuerySpec q;
  q.inclusion = {"ROOT"};
  const auto c = execute_query(d, q);
  const AttributeConstraint p{"age", CompareOp::Ge, {50.0}};
  const AttributeConstraint r{"sex", CompareOp::Eq, {std::string("F")}};
  const auto pq = apply_attribute_filter(*apply_attribute_filter(*c, p), r);
  const auto qp = apply_attribute_filter(*apply_attribute_filter(*c, r), p);
  CHECK(member_ids(*pq) == member_ids(*qp));
  CHECK(pq->size() > 0);
  CHECK(pq->size() < c->size());
}

TEST_CASE("execute_query: deterministic with non-decreasing anchors") {
  SyntheticSpec s;
  s.n_entities = 800;
  s.n_event_types = 40;
  s.branching = 4;
  s.depth = 2;
  s.mean_seq_length = 15;
  s.seed = 12;
  const auto d = generate_synthetic(s);
  const auto& h = d->types();
  std::vector<std::string> top;
  for (NodeId c : h.children(h.root()))
    if (!h.is_leaf(c)) top.push_back(h.code(c));
  QuerySpec q;
  REQUIRE(top.size() >= 2);
  q.inclusion = {top[0], top[1], top[0]};
  q.outcome = {s.outcome_code};
  q.lookback_days = 30;
  const auto a = execute_query(d, q);
  const auto b = execute_query(d, q);
  CHECK(a->id == b->id);
  REQUIRE(a->size() == b->size());
  CHECK(a->size() > 0);
  for (std::size_t i = 0; i < a->size(); ++i) {
    CHECK(a->members[i].entity == b->members[i].entity);
    CHECK(a->members[i].outcome == b->members[i].outcome);
    const auto& anchors = a->members[i].anchors;
    CHECK(std::is_sorted(anchors.begin(), anchors.end()));
  }
}

TEST_CASE("query spec JSON round trip") {
  QuerySpec q;
  q.inclusion = {"G89", "ENC.DIS"};
  q.lookback_days = 365;
  q.outcome = {"F11"};
  q.attribute_constraints = {{"age", CompareOp::Ge, {18.0}},
                             {"sex", CompareOp::In, {std::string("F"), std::string("M")}}};
  const auto text = to_json(q);
  const auto back = parse_query_spec(text);
  CHECK(back.inclusion == q.inclusion);
  CHECK(back.lookback_days == 365);
  CHECK(back.outcome == q.outcome);
  REQUIRE(back.attribute_constraints.size() == 2);
  CHECK(back.attribute_constraints[1].values.size() == 2);
  CHECK(to_json(back) == text);
  CHECK(text.find("\"inclusion\"") != std::string::npos);
  CHECK(text.find("\"attribute_constraints\"") != std::string::npos);
  CHECK(text.find("\"lookback_days\"") != std::string::npos);
  CHECK(text.find("\"outcome\"") != std::string::npos);
  CHECK(code_of([] { parse_query_spec("{"); }) == ErrorCode::InvalidSpec);
  CHECK(code_of([] { parse_query_spec(R"({"inclusion":["A"],"outcome":[],"attribute_constraints":[{"attribute":"a","op":"~","value":1}]})"); }) ==
        ErrorCode::InvalidSpec);
}

TEST_CASE("use-case fixture query") {
  const auto c = execute_query(fixtures::use_case_dataset(), fixtures::use_case_query());
  CHECK(c->size() == fixtures::kUseCaseMembers);
  CHECK(c->positives() == fixtures::kUseCasePositives);
  const double rate = double(c->positives()) / double(c->size());
  CHECK(rate == doctest::Approx(0.07).epsilon(0.005 / 0.07));
}

TEST_CASE("context_window: edge, milestone and bypass members") {
  const auto d = toy::dataset(
      {{"ROOT", "", ""}, {"P", "ROOT", ""}, {"D", "ROOT", ""}, {"S", "ROOT", ""}},
      {{"a", {{"P", 10}, {"S", 15}, {"D", 20}}}, {"b", {{"P", 0}, {"D", 40}}}});
  QuerySpec q;
  q.inclusion = {"P", "D"};
  const auto c = execute_query(d, q);
  const auto t = build_timeline(c);
  const auto edge = context_window(t, Selection::parse("e0", t));
  REQUIRE(edge.windows.size() == 2);
  // (anchor_from, anchor_to] as inclusive days.
  CHECK(edge.windows[0] == DayWindow{toy::day(11), toy::day(20)});
  const auto ms = context_window(t, Selection::parse("m0", t));
  CHECK(ms.windows[0] == DayWindow{toy::day(10), toy::day(10)});
  CHECK(ms.events(0).size() == 1);

  const auto split = add_milestone(t, "e0", "S");
  const auto bypass = split.edges.back();
  REQUIRE(bypass.members == std::vector<std::uint32_t>{1});
  const auto via = context_window(split, Selection::parse(split.edges[0].id, split));
  CHECK(via.windows[1].empty());
  CHECK(via.events(1).empty());
  CHECK(code_of([&] { context_window(t, Selection{Selection::Kind::Edge, "e9"}); }) ==
        ErrorCode::UnknownSelection);
  CHECK(code_of([&] { Selection::parse("zz", t); }) == ErrorCode::UnknownSelection);
}
