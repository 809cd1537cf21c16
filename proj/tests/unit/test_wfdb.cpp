#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "ecggraph/wfdb.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace ecggraph;
using namespace ecggraph::wfdb;

namespace {

const char* kHeader100 =
    "100 2 360 650000\n"
    "100.dat 212 200 11 1024 995 -22131 0 MLII\n"
    "100.dat 212 200 11 1024 1011 20052 0 V5\n"
    "# 69 M 1085 1629 x1\n";

const char* kHeader114 =
    "114 2 360 650000\n"
    "114.dat 212 200 11 1024 1032 -31231 0 V5\n"
    "114.dat 212 200 11 1024 984 -5207 0 MLII\n";

std::vector<std::uint8_t> words(std::initializer_list<std::uint16_t> ws) {
  std::vector<std::uint8_t> out;
  for (auto w : ws) {
    out.push_back(static_cast<std::uint8_t>(w & 0xFF));
    out.push_back(static_cast<std::uint8_t>(w >> 8));
  }
  return out;
}

}  // namespace

TEST_SUITE("wfdb") {

TEST_CASE("header of the distributed record 100 layout") {
  const auto h = parse_header(kHeader100);
  CHECK(h.record_id == "100");
  CHECK(h.n_signals == 2);
  CHECK(h.sampling_rate == 360.0);
  CHECK(h.n_samples == 650000);
  REQUIRE(h.signals.size() == 2);
  CHECK(h.signals[0].lead_name == "MLII");
  CHECK(h.signals[1].lead_name == "V5");
  CHECK(h.signals[0].gain == 200.0);
  CHECK(h.signals[0].adc_zero == 1024);
  CHECK(h.signals[0].baseline == 1024);
  CHECK(h.signals[0].initial_value == 995);
  CHECK(h.signals[0].checksum == -22131);
  CHECK(select_lead_ii(h) == 0);
  CHECK(select_lead_ii(parse_header(kHeader114)) == 1);
}

TEST_CASE("minimal constructed header") {
  const auto h = parse_header("X 2 360 10\nx.dat 212 200 11 1024 0 0 0 MLII\nx.dat 212 200 11 1024 0 0 0 V1\n");
  CHECK(h.n_samples == 10);
  CHECK(h.record_id == "X");
}

TEST_CASE("header with gain baseline and units") {
  const auto h = parse_header("Y 2 360 5\ny.dat 212 200.0(1000)/mV 11 1024 0 0 0 MLII\ny.dat 212 0 11 1024 0 0 0 V1\n");
  CHECK(h.signals[0].baseline == 1000);
  CHECK(h.signals[0].adc_zero == 1024);
  CHECK(h.signals[1].gain == 200.0);  // zero gain means the default
}

TEST_CASE("header rejections name the record") {
  auto msg = [](const char* text) {
    try {
      parse_header(text);
    } catch (const WfdbError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const auto fmt16 = msg("R9 2 360 10\nr.dat 16 200 11 1024 0 0 0 MLII\nr.dat 16 200 11 1024 0 0 0 V1\n");
  CHECK(fmt16.find("unsupported storage format") != std::string::npos);
  CHECK(fmt16.find("R9") != std::string::npos);
  CHECK_FALSE(msg("R9 2 360\n").empty());
  CHECK_FALSE(msg("R9 2 abc 10\nr.dat 212\nr.dat 212\n").empty());
  CHECK_FALSE(msg("R9 2 360 10\nr.dat 212 200 11 1024 0 0 0 MLII\n").empty());
  CHECK_FALSE(msg("R9 1 360 10\nr.dat 212 200 11 1024 0 0 0 MLII\n").empty());
  CHECK_FALSE(msg("R9 2 360 10\nr.dat 212 2x0 11 1024 0 0 0 MLII\nr.dat 212 200 11 1024 0 0 0 V1\n").empty());
}

TEST_CASE("lead II selection rejects records without MLII") {
  const auto h = parse_header("Z 2 360 10\nz.dat 212 200 11 1024 0 0 0 V5\nz.dat 212 200 11 1024 0 0 0 V2\n");
  CHECK_THROWS_AS(select_lead_ii(h), WfdbError);
}

TEST_CASE("format 212 bit arithmetic") {
  const std::vector<std::uint8_t> a{0x01, 0x20, 0x03};
  auto s = decode_format212(a, 1);
  CHECK(s.channel0 == std::vector<int>{1});
  CHECK(s.channel1 == std::vector<int>{515});
  const std::vector<std::uint8_t> b{0xFF, 0x0F, 0x00};
  s = decode_format212(b, 1);
  CHECK(s.channel0 == std::vector<int>{-1});
  CHECK(s.channel1 == std::vector<int>{0});
}

TEST_CASE("format 212 truncation reports the byte offset") {
  const std::vector<std::uint8_t> bytes(7, 0);
  try {
    decode_format212(bytes, 3);
    FAIL("expected an error");
  } catch (const WfdbError& e) {
    CHECK(std::string(e.what()).find("offset 6") != std::string::npos);
  }
}

TEST_CASE("format 212 round trip on random pairs") {
  std::mt19937_64 rng(212);
  std::uniform_int_distribution<int> d(-2048, 2047);
  std::vector<int> c0(100000), c1(100000);
  for (std::size_t i = 0; i < c0.size(); ++i) {
    c0[i] = d(rng);
    c1[i] = d(rng);
  }
  c0[0] = -2048;
  c1[0] = 2047;
  const auto bytes = encode_format212(c0, c1);
  CHECK(bytes.size() == 300000);
  const auto back = decode_format212(bytes, c0.size());
  CHECK(back.channel0 == c0);
  CHECK(back.channel1 == c1);
  std::vector<int> bad{4096};
  CHECK_THROWS_AS(encode_format212(bad, bad), WfdbError);
}

TEST_CASE("physical conversion") {
  CHECK(to_physical(1024, 200, 1024) == 0.0);
  CHECK(to_physical(1224, 200, 1024) == 1.0);
  CHECK_THROWS_AS(to_physical(1, 0, 0), WfdbError);
  CHECK_THROWS_AS(to_physical(1, -5, 0), WfdbError);
}

TEST_CASE("annotation streams") {
  auto one = parse_annotations(words({(1 << 10) | 77, 0}));
  REQUIRE(one.size() == 1);
  CHECK(one[0].sample_index == 77);
  CHECK(one[0].symbol == 'N');

  // AUX with 3 bytes plus a pad byte, then a V beat.
  std::vector<std::uint8_t> aux = words({(63 << 10) | 3});
  aux.insert(aux.end(), {'(', 'N', 0, 0});
  const auto rest = words({(5 << 10) | 10, 0});
  aux.insert(aux.end(), rest.begin(), rest.end());
  auto v = parse_annotations(aux);
  REQUIRE(v.size() == 1);
  CHECK(v[0].sample_index == 10);
  CHECK(v[0].symbol == 'V');

  // SKIP of 70000 (high half first), then NUM/SUB/CHN, a non-beat and an A beat.
  const auto skip = parse_annotations(
      words({59 << 10, 0x0001, 0x1170, (8 << 10) | 0, (60 << 10) | 1, (61 << 10) | 2,
             (62 << 10) | 0, (28 << 10) | 5, (8 << 10) | 3, 0}));
  REQUIRE(skip.size() == 2);
  CHECK(skip[0].sample_index == 70000);
  CHECK(skip[0].symbol == 'A');
  CHECK(skip[1].sample_index == 70008);

  CHECK_THROWS_AS(parse_annotations(words({(1 << 10) | 5})), WfdbError);
  CHECK_THROWS_AS(parse_annotations(words({59 << 10, 0x0001})), WfdbError);
}

TEST_CASE("annotation encoder round trip") {
  std::mt19937_64 rng(7);
  std::vector<AnnotationToWrite> in;
  std::vector<RawAnnotation> expected;
  std::size_t t = 0;
  const std::vector<int> codes{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 34, 28, 14};
  for (int i = 0; i < 500; ++i) {
    t += rng() % 3000;
    const int code = codes[rng() % codes.size()];
    in.push_back({t, code, code == 28 ? "(AFL" : (i % 7 == 0 ? "x" : "")});
    if (auto s = beat_symbol(code)) expected.push_back({t, *s});
  }
  const auto out = parse_annotations(encode_annotations(in));
  REQUIRE(out.size() == expected.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].sample_index == expected[i].sample_index);
    CHECK(out[i].symbol == expected[i].symbol);
  }
}

TEST_CASE("beat code table") {
  const std::vector<std::pair<int, char>> table{{1, 'N'}, {2, 'L'}, {3, 'R'},  {4, 'a'},
                                                {5, 'V'}, {6, 'F'}, {7, 'J'},  {8, 'A'},
                                                {9, 'S'}, {10, 'E'}, {11, 'j'}, {34, 'e'}};
  for (const auto& [code, sym] : table) {
    CHECK(beat_symbol(code) == sym);
    CHECK(beat_code(sym) == code);
  }
  CHECK_FALSE(beat_symbol(28).has_value());
  CHECK_FALSE(beat_symbol(14).has_value());
}

TEST_CASE("AAMI mapping") {
  CHECK(map_symbol('L') == AamiClass::N);
  CHECK(map_symbol('A') == AamiClass::S);
  CHECK_FALSE(map_symbol('F').has_value());
  // Partition: every character maps to at most one class and the class sets
  // are exactly the AAMI groups.
  std::set<char> n, s, v;
  for (int c = 0; c < 256; ++c) {
    if (auto k = map_symbol(static_cast<char>(c))) {
      (*k == AamiClass::N ? n : *k == AamiClass::S ? s : v).insert(static_cast<char>(c));
    }
  }
  CHECK(n == std::set<char>{'N', 'L', 'R', 'e', 'j'});
  CHECK(s == std::set<char>{'A', 'a', 'J', 'S'});
  CHECK(v == std::set<char>{'V', 'E'});
  for (char c : {'Q', '/', 'f', '+', '~', '|'}) CHECK_FALSE(map_symbol(c).has_value());
}

TEST_CASE("standard split") {
  const auto& sp = DatasetSplit::standard();
  CHECK(sp.train_ids.size() == 22);
  CHECK(sp.test_ids.size() == 22);
  std::set<std::string> tr(sp.train_ids.begin(), sp.train_ids.end());
  std::set<std::string> te(sp.test_ids.begin(), sp.test_ids.end());
  CHECK(tr.count("101") == 1);
  CHECK(tr.count("100") == 0);
  std::set<std::string> all = tr;
  all.insert(te.begin(), te.end());
  CHECK(all.size() == 44);
  for (const char* excluded : {"102", "104", "107", "217"}) CHECK(all.count(excluded) == 0);
  CHECK(tr == std::set<std::string>{"101", "106", "108", "109", "112", "114", "115", "116",
                                    "118", "119", "122", "124", "201", "203", "205", "207",
                                    "208", "209", "215", "220", "223", "230"});
  CHECK(te == std::set<std::string>{"100", "103", "105", "111", "113", "117", "121", "123",
                                    "200", "202", "210", "212", "213", "214", "219", "221",
                                    "222", "228", "231", "232", "233", "234"});
}

TEST_CASE("fixture records match the reference reader") {
  const auto fixtures = test_support::fixture_dir() / "wfdb";
  std::ifstream in(fixtures / "reference.json");
  const auto ref = nlohmann::json::parse(in);
  for (const auto& r : ref) {
    const auto id = r.at("record").get<std::string>();
    CAPTURE(id);
    const auto rec = load_record(fixtures, id);
    CHECK(rec.header.n_samples == r.at("n_samples").get<std::size_t>());
    CHECK(rec.header.sampling_rate == r.at("fs").get<double>());
    const auto leads = r.at("leads").get<std::vector<std::string>>();
    CHECK(rec.header.signals[0].lead_name == leads[0]);
    CHECK(rec.header.signals[1].lead_name == leads[1]);
    CHECK(rec.lead_ii_channel == static_cast<std::size_t>(leads[0] == "MLII" ? 0 : 1));

    const auto bytes = read_binary_file(fixtures / rec.header.signals[0].file_name);
    const auto dig = decode_format212(bytes, rec.header.n_samples);
    const auto ref_dig = r.at("digital_first_1000");
    const auto ref_phys = r.at("physical_first_1000");
    for (std::size_t i = 0; i < 1000; ++i) {
      REQUIRE(dig.channel0[i] == ref_dig[0][i].get<int>());
      REQUIRE(dig.channel1[i] == ref_dig[1][i].get<int>());
      REQUIRE(rec.lead_ii[i] ==
              doctest::Approx(ref_phys[rec.lead_ii_channel][i].get<double>()).epsilon(1e-12));
    }

    // Reference annotations include non-beat codes; the loader keeps beats.
    const auto samples = r.at("annotation_samples").get<std::vector<std::size_t>>();
    const auto symbols = r.at("annotation_symbols").get<std::vector<std::string>>();
    std::vector<std::pair<std::size_t, char>> beats;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const char c = symbols[i][0];
      if (beat_code(c)) beats.emplace_back(samples[i], c);
    }
    REQUIRE(rec.beats.size() == beats.size());
    for (std::size_t i = 0; i < beats.size(); ++i) {
      CHECK(rec.beats[i].sample_index == beats[i].first);
      CHECK(rec.beats[i].symbol == beats[i].second);
      CHECK(rec.beats[i].aami_class == map_symbol(beats[i].second));
      CHECK(rec.beats[i].sample_index < rec.header.n_samples);
      if (i > 0) CHECK(rec.beats[i].sample_index > rec.beats[i - 1].sample_index);
    }
  }
}

TEST_CASE("loading an empty directory reports all 44 records") {
  test_support::TempDir tmp;
  try {
    load_dataset(tmp.path(), DatasetSplit::standard());
    FAIL("expected an error");
  } catch (const DatasetError& e) {
    CHECK(e.failures().size() == 44);
    CHECK(e.failures().front().find("101") != std::string::npos);
  }
}

TEST_CASE("missing data file names the record") {
  test_support::TempDir tmp;
  std::filesystem::copy(test_support::fixture_dir() / "wfdb" / "fx100.hea", tmp.path());
  std::filesystem::copy(test_support::fixture_dir() / "wfdb" / "fx100.atr", tmp.path());
  try {
    load_record(tmp.path(), "fx100");
    FAIL("expected an error");
  } catch (const WfdbError& e) {
    CHECK(std::string(e.what()).find("fx100") != std::string::npos);
  }
}

TEST_CASE("header writer round trip") {
  const auto h = parse_header(kHeader100);
  const auto again = parse_header(format_header(h));
  CHECK(again.n_samples == h.n_samples);
  CHECK(again.signals[1].lead_name == "V5");
  CHECK(again.signals[0].checksum == h.signals[0].checksum);
}

TEST_CASE("beat audit CSV") {
  test_support::TempDir tmp;
  const auto rec = load_record(test_support::fixture_dir() / "wfdb", "fx100");
  write_beat_audit_csv(rec, tmp.path() / "a.csv");
  std::ifstream in(tmp.path() / "a.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "sample_index,symbol,aami_class");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == rec.beats.size());
}

}  // TEST_SUITE
