#include <doctest.h>

#include <sstream>

#include "edgeguard/error.hpp"
#include "edgeguard/taxonomy.hpp"

using namespace edgeguard;

TEST_CASE("canonical taxonomy covers 21 labels") {
  const Taxonomy& t = Taxonomy::builtin();
  const auto ids = t.label_ids();
  REQUIRE(ids.size() == 21);
  CHECK(ids.front() == 1);
  CHECK(ids.back() == 21);
  CHECK(t.lookup(std::string("C&C-FileDownload")).label_id == 6);
  CHECK(t.lookup(std::string("C&C-HeartBeat")).label_id == 5);
}

TEST_CASE("strict mode keeps the printed duplicate label") {
  const Taxonomy& t = Taxonomy::builtin(TaxonomyMode::StrictPaper);
  CHECK(t.lookup(std::string("C&C-FileDownload")).label_id == 5);
  CHECK_FALSE(t.contains_label(6));
  CHECK(t.label_ids().size() == 20);
}

TEST_CASE("ids shared by both tables merge under Both") {
  const Taxonomy& t = Taxonomy::builtin();
  const TaxonomyEntry benign = t.lookup(3);
  CHECK(benign.dataset == Dataset::Both);
  CHECK(benign.class_name == "Benign");
  CHECK(benign.proportion_percent == 0.0);
  CHECK(t.lookup(3, Dataset::TonIoT).class_name == "Normal");
  CHECK(t.lookup(3, Dataset::TonIoT).proportion_percent == 3.565);
  CHECK(t.lookup(10, Dataset::IoT23).proportion_percent == 10.560);
  CHECK(t.resolve_label("Normal") == 3);
  CHECK(t.resolve_label("Benign") == 3);
  CHECK(t.resolve_label("17") == 17);
  CHECK(t.class_name(3) == "Benign");
}

TEST_CASE("unknown keys throw UnknownClass") {
  const Taxonomy& t = Taxonomy::builtin();
  CHECK_THROWS_AS(t.lookup(std::string("Mirai")), Error);
  try {
    t.lookup(22);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownClass);
  }
  try {
    t.resolve_label("0");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownClass);
  }
}

TEST_CASE("delimited export round trips") {
  for (TaxonomyMode mode : {TaxonomyMode::Canonical, TaxonomyMode::StrictPaper}) {
    const Taxonomy& t = Taxonomy::builtin(mode);
    std::stringstream ss;
    t.export_delimited(ss);
    CHECK(Taxonomy::import_delimited(ss, mode).entries() == t.entries());
  }
}

TEST_CASE("construction rejects inconsistent tables") {
  std::vector<TaxonomyEntry> rows = Taxonomy::builtin().entries();
  rows[0].label_id = 0;
  CHECK_THROWS_AS(Taxonomy{rows}, Error);

  rows = Taxonomy::builtin().entries();
  std::erase_if(rows, [](const TaxonomyEntry& e) { return e.label_id == 8; });
  try {
    Taxonomy t(rows);
    FAIL("accepted a table without label 8");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaMismatch);
  }
  rows = Taxonomy::builtin(TaxonomyMode::StrictPaper).entries();
  std::erase_if(rows, [](const TaxonomyEntry& e) { return e.label_id == 8; });
  CHECK(Taxonomy(rows, TaxonomyMode::StrictPaper).label_ids().size() == 19);

  rows = Taxonomy::builtin().entries();
  rows[1].proportion_percent = 90.0;
  CHECK_THROWS_AS(Taxonomy{rows}, Error);
}

TEST_CASE("class proportions") {
  std::vector<LabeledFlow> flows(4);
  flows[0].label = 3;
  flows[1].label = 3;
  flows[2].label = 10;
  flows[3].label = 17;
  const auto p = class_proportions(flows);
  CHECK(p.at(3) == 50.0);
  CHECK(p.at(10) == 25.0);
  CHECK_THROWS_AS(class_proportions({}), Error);
}
