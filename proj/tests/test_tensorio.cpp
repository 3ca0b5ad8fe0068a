#include <gtest/gtest.h>

#include <clocale>
#include <filesystem>
#include <random>

#include "trf/tensorio.hpp"

namespace fs = std::filesystem;
using namespace trf;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("trf_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

EegRecording small_eeg() {
  EegRecording rec;
  rec.data.resize(2, 4);
  rec.data << 1.5, -2.0, 3.25, 0.0, 1e-300, 7.0, -0.1, 42.0;
  rec.fs_hz = 100.0;
  rec.channel_names = {"Cz", "Pz"};
  rec.subject_id = "S01";
  return rec;
}

}  // namespace

TEST(Btsr, HeaderLayoutIsCanonical) {
  TensorFile t{DType::f64, {3}, {{"b", 1}, {"a", "x"}}, {1.0, 2.0, 3.0}};
  const auto bytes = encode_btsr(t);
  const auto nl = bytes.find('\n');
  EXPECT_EQ(bytes.substr(0, nl), R"({"magic":"BTSR1","dtype":"f64","shape":[3],"meta":{"a":"x","b":1}})");
  ASSERT_EQ(bytes.size(), nl + 1 + 24);
  // little-endian 1.0 = 00 00 00 00 00 00 f0 3f
  EXPECT_EQ(static_cast<unsigned char>(bytes[nl + 1 + 6]), 0xf0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[nl + 1 + 7]), 0x3f);
}

TEST(Btsr, RoundTripSimpleAndEmpty) {
  TempDir dir;
  write_tensor(dir / "a.btsr", DType::f64, {3}, Json::object(), {1.0, 2.0, 3.0});
  const auto a = read_tensor(dir / "a.btsr");
  EXPECT_EQ(a.shape, (std::vector<std::size_t>{3}));
  EXPECT_EQ(a.values, (std::vector<double>{1.0, 2.0, 3.0}));

  write_tensor(dir / "e.btsr", DType::f32, {0}, Json::object(), {});
  const auto e = read_tensor(dir / "e.btsr");
  EXPECT_EQ(e.shape, (std::vector<std::size_t>{0}));
  EXPECT_TRUE(e.values.empty());
}

TEST(Btsr, RoundTripPropertyBitExact) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  std::uniform_int_distribution<int> dim(0, 5);
  for (int trial = 0; trial < 50; ++trial) {
    TensorFile t;
    t.dtype = trial % 2 ? DType::f32 : DType::f64;
    t.shape = {static_cast<std::size_t>(dim(rng)), static_cast<std::size_t>(dim(rng))};
    t.meta = {{"trial", trial}, {"name", "t" + std::to_string(trial)}};
    for (std::size_t k = 0; k < shape_product(t.shape); ++k) {
      double v = u(rng);
      if (t.dtype == DType::f32) v = static_cast<float>(v);
      t.values.push_back(v);
    }
    EXPECT_EQ(decode_btsr(encode_btsr(t)), t);
  }
}

TEST(Btsr, LengthMismatchIsValidationError) {
  TempDir dir;
  EXPECT_THROW(write_tensor(dir / "x.btsr", DType::f64, {2, 2}, Json::object(), {1, 2, 3}), ValidationError);

  // a hand-built file with 7 values under shape [2,4]
  std::string bytes = R"({"magic":"BTSR1","dtype":"f64","shape":[2,4],"meta":{}})";
  bytes += '\n';
  bytes.append(7 * 8, '\0');
  EXPECT_THROW(decode_btsr(bytes), ValidationError);
}

TEST(Btsr, MalformedHeaderNamesByteOffset) {
  try {
    decode_btsr(std::string(R"({"magic":"BTSR1",,})") + "\n");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte offset"), std::string::npos);
  }
  EXPECT_THROW(decode_btsr("no newline here"), FormatError);
  EXPECT_THROW(decode_btsr(std::string(R"({"magic":"BTSR1","dtype":"i8","shape":[1],"meta":{}})") + "\n" + "x"),
               FormatError);
  EXPECT_THROW(decode_btsr(std::string(R"({"magic":"NOPE","dtype":"f64","shape":[0],"meta":{}})") + "\n"),
               FormatError);
}

TEST(Eeg, ReadWriteRoundTrip) {
  TempDir dir;
  const auto rec = small_eeg();
  write_eeg(dir / "eeg.btsr", rec);
  const auto back = read_eeg(dir / "eeg.btsr");
  EXPECT_EQ(back.n_channels(), 2);
  EXPECT_EQ(back.n_samples(), 4);
  EXPECT_EQ(back.fs_hz, 100.0);
  EXPECT_EQ(back.channel_names, rec.channel_names);
  EXPECT_EQ(back.subject_id, "S01");
  EXPECT_TRUE((back.data.array() == rec.data.array()).all());
}

TEST(Eeg, MissingMetaKeyIsNamed) {
  TensorFile t{DType::f64, {1, 2}, {{"fs_hz", 10.0}, {"channel_names", {"Cz"}}}, {0.0, 1.0}};
  try {
    eeg_from_tensor(t);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("subject_id"), std::string::npos);
  }
}

TEST(Eeg, InvariantViolationsRejected) {
  TensorFile dup{DType::f64, {2, 1}, {{"fs_hz", 10.0}, {"channel_names", {"Cz", "Cz"}}, {"subject_id", "s"}}, {0, 1}};
  EXPECT_THROW(eeg_from_tensor(dup), ValidationError);
  TensorFile fs0{DType::f64, {1, 1}, {{"fs_hz", 0.0}, {"channel_names", {"Cz"}}, {"subject_id", "s"}}, {0}};
  EXPECT_THROW(eeg_from_tensor(fs0), ValidationError);
  TensorFile rows{DType::f64, {2, 1}, {{"fs_hz", 1.0}, {"channel_names", {"Cz"}}, {"subject_id", "s"}}, {0, 1}};
  EXPECT_THROW(eeg_from_tensor(rows), ValidationError);
}

TEST(WordEvents, ParsesThreeRows) {
  const auto seq = parse_word_events(
      "token\tonset_s\tpos\tv0\tv1\tv2\tv3\n"
      "Alice\t0.5\tNOUN\t1\t2\t3\t4\n"
      "was\t0.9\t\t-1\t0\t0.5\t2e-3\n"
      "beginning\t1.25\tVERB\t0\t0\t0\t0\n");
  ASSERT_EQ(seq.events.size(), 3u);
  EXPECT_EQ(seq.dim, 4);
  EXPECT_EQ(seq.events[1].token, "was");
  EXPECT_EQ(seq.events[1].pos_tag, "");
  EXPECT_DOUBLE_EQ(seq.events[1].vector[3], 2e-3);
  EXPECT_DOUBLE_EQ(seq.events[2].onset_s, 1.25);
}

TEST(WordEvents, DecreasingOnsetIsValidationError) {
  EXPECT_THROW(parse_word_events("token\tonset_s\tpos\tv0\na\t1.0\t\t0\nb\t0.5\t\t0\n"), ValidationError);
}

TEST(WordEvents, RaggedRowReportsLine) {
  try {
    parse_word_events("token\tonset_s\tpos\tv0\tv1\na\t1.0\t\t0\t1\nb\t2.0\t\t0\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(WordEvents, HeaderOnlyGivesEmptySequence) {
  const auto seq = parse_word_events("token\tonset_s\tpos\tv0\tv1\tv2\n");
  EXPECT_TRUE(seq.events.empty());
  EXPECT_EQ(seq.dim, 3);
}

TEST(WordEvents, RoundTripProperty) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 10);
  WordEventSequence seq;
  seq.dim = 5;
  double t = 0;
  for (int k = 0; k < 40; ++k) {
    WordEvent ev;
    ev.token = "tok" + std::to_string(k);
    t += std::abs(n(rng));
    ev.onset_s = t;
    ev.pos_tag = k % 3 ? "NOUN" : "";
    ev.vector = Vector::NullaryExpr(5, [&] { return n(rng); });
    seq.events.push_back(ev);
  }
  const auto back = parse_word_events(format_word_events(seq));
  ASSERT_EQ(back.events.size(), seq.events.size());
  for (std::size_t k = 0; k < seq.events.size(); ++k) {
    EXPECT_EQ(back.events[k].token, seq.events[k].token);
    EXPECT_EQ(back.events[k].onset_s, seq.events[k].onset_s);
    EXPECT_EQ(back.events[k].pos_tag, seq.events[k].pos_tag);
    EXPECT_TRUE((back.events[k].vector.array() == seq.events[k].vector.array()).all());
  }
}

TEST(WordEvents, LocaleIndependent) {
  // A comma-decimal locale must not change parsing; skip silently if absent.
  const char* old = std::setlocale(LC_ALL, nullptr);
  std::string saved = old ? old : "C";
  if (std::setlocale(LC_ALL, "de_DE.UTF-8") == nullptr) GTEST_SKIP() << "de_DE locale not installed";
  const auto seq = parse_word_events("token\tonset_s\tpos\tv0\na\t0.5\t\t1.25\n");
  std::setlocale(LC_ALL, saved.c_str());
  EXPECT_DOUBLE_EQ(seq.events[0].vector[0], 1.25);
}

TEST(Layout, ParsesEntries) {
  const auto layout = parse_channel_layout("name,x,y\nCz,0.0,0.0\nFz,0,0.5\n");
  ASSERT_EQ(layout.entries.size(), 2u);
  EXPECT_EQ(layout.entries[0].name, "Cz");
  EXPECT_EQ(layout.entries[0].x, 0.0);
  EXPECT_EQ(layout.entries[1].y, 0.5);
}

TEST(Layout, DuplicateAndNonNumeric) {
  EXPECT_THROW(parse_channel_layout("name,x,y\nCz,0,0\nCz,1,1\n"), ValidationError);
  try {
    parse_channel_layout("name,x,y\nCz,0,0\nPz,abc,1\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Layout, PreservesCount) {
  std::string text = "name,x,y\n";
  for (int k = 0; k < 61; ++k) text += "ch" + std::to_string(k) + "," + std::to_string(k) + ",0.5\n";
  EXPECT_EQ(parse_channel_layout(text).entries.size(), 61u);
}
