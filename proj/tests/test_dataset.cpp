#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "edgeguard/dataset.hpp"
#include "edgeguard/error.hpp"
#include "edgeguard/synth.hpp"

using namespace edgeguard;

namespace {

const char* kHeader =
    "src_port,dst_port,protocol,duration,service,orig_bytes,resp_bytes,missed_bytes,"
    "orig_ip_bytes,resp_ip_bytes,orig_pkts,resp_pkts,conn_state,label\n";

ErrorCode ingest_code(const std::string& text, const IngestOptions& opts = {}) {
  std::istringstream in(text);
  try {
    ingest(in, opts);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("ingest accepted the input");
  return ErrorCode::EmptyStream;
}

}  // namespace

TEST_CASE("ingest reads ids and class names") {
  std::istringstream in(std::string(kHeader) +
                        "49864,80,tcp,0.049751,http,243,3440,0,511,3760,5,6,SF,Benign\n"
                        "1,23,TCP,0,-,0,0,0,40,0,1,0,S0,17\n");
  const IngestResult r = ingest(in);
  REQUIRE(r.dataset.size() == 2);
  CHECK(r.rows_read == 2);
  CHECK(r.dataset.records[0].label == 3);
  CHECK(r.dataset.records[0].flow.protocol == "TCP");
  CHECK(r.dataset.records[1].label == 17);
}

TEST_CASE("zeek column aliases") {
  std::istringstream in(
      "ts,id.orig_h,id.orig_p,id.resp_h,id.resp_p,proto,service,duration,orig_bytes,resp_bytes,"
      "conn_state,missed_bytes,orig_pkts,orig_ip_bytes,resp_pkts,resp_ip_bytes,label\n"
      "1525879831.015811,192.168.100.103,51524,65.127.233.163,23,tcp,-,2.999051,0,0,S0,0,3,180,"
      "0,0,PartOfAHorizontalPortScan\n");
  const IngestResult r = ingest(in);
  REQUIRE(r.dataset.size() == 1);
  const FlowRecord& f = r.dataset.records[0].flow;
  CHECK(f.src_ip == std::optional<std::string>("192.168.100.103"));
  CHECK(f.dst_port == 23);
  CHECK(f.orig_ip_bytes == 180);
  CHECK(f.timestamp.value() == doctest::Approx(1525879831.015811));
  CHECK(r.dataset.records[0].label == 17);
}

TEST_CASE("schema and label failures") {
  CHECK(ingest_code("a,b,label\n1,2,3\n") == ErrorCode::SchemaMismatch);
  CHECK(ingest_code(std::string(kHeader) +
                    "1,80,TCP,0.1,http,1,1,0,1,1,1,1,SF,NotAClass\n") == ErrorCode::LabelUnknown);
  CHECK(ingest_code(std::string(kHeader) + "1,80,TCP,0.1,http,x,1,0,1,1,1,1,SF,3\n") ==
        ErrorCode::MalformedNumber);
}

TEST_CASE("malformed rows under the threshold are skipped and counted") {
  std::string text = kHeader;
  for (int i = 0; i < 200; ++i) text += "1,80,TCP,0.1,http,1,1,0,1,1,1,1,SF,3\n";
  text += "1,80,TCP,0.1,http,1,1,0,1,1,1,1,SF,Bogus\n";
  std::istringstream in(text);
  const IngestResult r = ingest(in);
  CHECK(r.dataset.size() == 200);
  REQUIRE(r.malformed.size() == 1);
  CHECK(r.malformed[0].row == 201);
  CHECK(r.malformed[0].code == ErrorCode::LabelUnknown);
}

TEST_CASE("strict taxonomy resolves the duplicate label") {
  IngestOptions opts;
  opts.taxonomy = TaxonomyMode::StrictPaper;
  std::istringstream in(std::string(kHeader) +
                        "1,80,TCP,0.1,http,1,1,0,1,1,1,1,SF,C&C-FileDownload\n");
  CHECK(ingest(in, opts).dataset.records[0].label == 5);
  std::istringstream in2(std::string(kHeader) +
                         "1,80,TCP,0.1,http,1,1,0,1,1,1,1,SF,C&C-FileDownload\n");
  CHECK(ingest(in2).dataset.records[0].label == 6);
}

TEST_CASE("export then ingest is lossless in both formats") {
  const LabeledDataset d = synthesize(uniform_proportions(), 300, 5);
  for (DataFormat fmt : {DataFormat::Delimited, DataFormat::JsonLines}) {
    std::stringstream ss;
    export_dataset(ss, d, fmt);
    IngestOptions opts;
    opts.format = fmt;
    const IngestResult r = ingest(ss, opts);
    CHECK(r.malformed.empty());
    CHECK(r.dataset.records == d.records);
  }
}

TEST_CASE("split sizes, partition and determinism") {
  for (std::size_t n : {5u, 10u, 100u, 999u, 1000u}) {
    const LabeledDataset d = synthesize(uniform_proportions(), n, 3);
    const SplitAssignment s = split(d, 17);
    CHECK(s.train_idx.size() == (6 * n + 5) / 10);
    CHECK(s.val_idx.size() == (2 * n + 5) / 10);
    std::vector<std::size_t> all;
    for (const auto* part : {&s.train_idx, &s.val_idx, &s.test_idx}) {
      CHECK(std::is_sorted(part->begin(), part->end()));
      all.insert(all.end(), part->begin(), part->end());
    }
    std::sort(all.begin(), all.end());
    CHECK(all.size() == n);
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
    CHECK(all.back() == n - 1);
    CHECK(split(d, 17) == s);
  }
}

TEST_CASE("stratified split keeps class shares") {
  const LabeledDataset d = synthesize(uniform_proportions(), 2100, 3);
  const SplitAssignment s = split(d, 1);
  CHECK(s.mode == SplitMode::Stratified);
  std::map<int, std::size_t> per_class;
  for (auto i : s.train_idx) ++per_class[d.records[i].label];
  for (const auto& [label, count] : per_class) CHECK(count == 60);
}

TEST_CASE("tiny classes fall back to a random split") {
  const LabeledDataset d = synthesize(uniform_proportions(), 42, 3);
  CHECK(split(d, 1).mode == SplitMode::Random);
  CHECK(split(d, 1, false).mode == SplitMode::Random);
}

TEST_CASE("split needs five records") {
  const LabeledDataset d = synthesize(uniform_proportions(), 4, 3);
  try {
    split(d, 1);
    FAIL("split accepted 4 records");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewRecords);
  }
}

TEST_CASE("subset materializes indices") {
  const LabeledDataset d = synthesize(uniform_proportions(), 30, 3);
  const LabeledDataset s = subset(d, {0, 29});
  REQUIRE(s.size() == 2);
  CHECK(s.records[1] == d.records[29]);
}
