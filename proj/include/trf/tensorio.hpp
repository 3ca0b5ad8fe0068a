#pragma once

// File formats: the BTSR tensor container, word-event TSV, and channel
// layout CSV. All parsing is locale-independent.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "trf/error.hpp"

namespace trf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Json = nlohmann::json;

struct EegRecording {
  Matrix data;  // channels x samples
  double fs_hz = 0.0;
  std::vector<std::string> channel_names;
  std::string subject_id;

  Eigen::Index n_channels() const { return data.rows(); }
  Eigen::Index n_samples() const { return data.cols(); }
};

struct WordEvent {
  std::string token;
  double onset_s = 0.0;
  Vector vector;
  std::string pos_tag;  // empty when untagged
};

struct WordEventSequence {
  std::vector<WordEvent> events;
  Eigen::Index dim = 0;
};

struct LayoutEntry {
  std::string name;
  double x = 0.0;
  double y = 0.0;
};

struct ChannelLayout {
  std::vector<LayoutEntry> entries;
};

enum class DType { f32, f64 };

inline std::string_view dtype_name(DType d) { return d == DType::f32 ? "f32" : "f64"; }

struct TensorFile {
  DType dtype = DType::f64;
  std::vector<std::size_t> shape;
  Json meta = Json::object();
  std::vector<double> values;  // row-major

  friend bool operator==(const TensorFile& a, const TensorFile& b) {
    if (a.dtype != b.dtype || a.shape != b.shape || a.meta != b.meta) return false;
    if (a.values.size() != b.values.size()) return false;
    // bitwise so that NaN payloads and signed zeros compare as stored
    for (std::size_t k = 0; k < a.values.size(); ++k) {
      if (std::bit_cast<std::uint64_t>(a.values[k]) != std::bit_cast<std::uint64_t>(b.values[k]))
        return false;
    }
    return true;
  }
};

// ---------------------------------------------------------------------------
// small text helpers

/// Shortest decimal representation that round-trips exactly.
inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool parse_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

/// Splits text into lines, dropping a trailing CR per line and one final
/// empty line produced by a terminating LF.
inline std::vector<std::string_view> split_lines(std::string_view text) {
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (auto& l : lines)
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  return lines;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string() + " for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw FormatError("read failure on " + path.string());
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw FormatError("write failure on " + path.string());
}

// ---------------------------------------------------------------------------
// BTSR container

inline std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) {
    if (d != 0 && n > std::numeric_limits<std::size_t>::max() / d)
      throw ValidationError("tensor shape overflows size_t");
    n *= d;
  }
  return n;
}

namespace detail {

template <class UInt>
void put_le(std::string& out, UInt bits) {
  for (std::size_t b = 0; b < sizeof(UInt); ++b)
    out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

template <class UInt>
UInt get_le(const char* p) {
  UInt v = 0;
  for (std::size_t b = 0; b < sizeof(UInt); ++b)
    v |= static_cast<UInt>(static_cast<unsigned char>(p[b])) << (8 * b);
  return v;
}

// Re-serializes with sorted keys so meta order is canonical regardless of
// insertion order.
inline nlohmann::ordered_json canonical(const Json& j) { return nlohmann::ordered_json::parse(j.dump()); }

}  // namespace detail

inline std::string encode_btsr(const TensorFile& t) {
  if (t.values.size() != shape_product(t.shape))
    throw ValidationError("tensor payload has " + std::to_string(t.values.size()) +
                          " values but shape implies " + std::to_string(shape_product(t.shape)));
  if (!t.meta.is_object()) throw ValidationError("tensor meta must be a JSON object");

  nlohmann::ordered_json header;
  header["magic"] = "BTSR1";
  header["dtype"] = std::string(dtype_name(t.dtype));
  header["shape"] = t.shape;
  header["meta"] = detail::canonical(t.meta);

  std::string out = header.dump();
  out.push_back('\n');
  if (t.dtype == DType::f64) {
    out.reserve(out.size() + 8 * t.values.size());
    for (double v : t.values) detail::put_le(out, std::bit_cast<std::uint64_t>(v));
  } else {
    out.reserve(out.size() + 4 * t.values.size());
    for (double v : t.values) detail::put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

inline TensorFile decode_btsr(std::string_view bytes, const std::string& origin = "<memory>") {
  auto nl = bytes.find('\n');
  if (nl == std::string_view::npos)
    throw FormatError(origin + ": malformed BTSR header at byte offset " + std::to_string(bytes.size()) +
                      " (no terminating LF)");
  Json header;
  try {
    header = Json::parse(bytes.substr(0, nl));
  } catch (const Json::parse_error& e) {
    auto off = e.byte > 0 ? e.byte - 1 : 0;
    throw FormatError(origin + ": malformed BTSR header at byte offset " + std::to_string(off));
  }
  auto header_error = [&](const std::string& what) {
    return FormatError(origin + ": malformed BTSR header at byte offset 0: " + what);
  };
  if (!header.is_object()) throw header_error("header is not a JSON object");
  if (!header.contains("magic") || header["magic"] != "BTSR1") throw header_error("bad or missing magic");
  if (!header.contains("dtype") || !header["dtype"].is_string()) throw header_error("missing dtype");
  if (!header.contains("shape") || !header["shape"].is_array()) throw header_error("missing shape");

  TensorFile t;
  const auto dtype = header["dtype"].get<std::string>();
  if (dtype == "f64")
    t.dtype = DType::f64;
  else if (dtype == "f32")
    t.dtype = DType::f32;
  else
    throw header_error("unknown dtype tag '" + dtype + "'");

  for (const auto& d : header["shape"]) {
    if (!d.is_number_unsigned()) throw header_error("shape entries must be nonnegative integers");
    t.shape.push_back(d.get<std::size_t>());
  }
  t.meta = header.value("meta", Json::object());
  if (!t.meta.is_object()) throw header_error("meta must be an object");

  const std::size_t elem = t.dtype == DType::f64 ? 8 : 4;
  const std::size_t n = shape_product(t.shape);
  const auto payload = bytes.substr(nl + 1);
  if (payload.size() % elem != 0 || payload.size() / elem != n)
    throw ValidationError(origin + ": payload holds " + std::to_string(payload.size() / elem) + " " + dtype +
                          " values (" + std::to_string(payload.size()) + " bytes) but shape implies " +
                          std::to_string(n));

  t.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const char* p = payload.data() + k * elem;
    t.values[k] = t.dtype == DType::f64 ? std::bit_cast<double>(detail::get_le<std::uint64_t>(p))
                                        : static_cast<double>(std::bit_cast<float>(detail::get_le<std::uint32_t>(p)));
  }
  return t;
}

inline void write_tensor(const std::filesystem::path& path, DType dtype, std::vector<std::size_t> shape, Json meta,
                         std::vector<double> values) {
  TensorFile t{dtype, std::move(shape), std::move(meta), std::move(values)};
  write_file_bytes(path, encode_btsr(t));
}

inline TensorFile read_tensor(const std::filesystem::path& path) {
  return decode_btsr(read_file_bytes(path), path.string());
}

/// Header line of a BTSR file without decoding the payload.
inline nlohmann::ordered_json read_btsr_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string() + " for reading");
  std::string line;
  if (!std::getline(in, line) || in.eof())
    throw FormatError(path.string() + ": malformed BTSR header at byte offset " + std::to_string(line.size()) +
                      " (no terminating LF)");
  try {
    return nlohmann::ordered_json::parse(line);
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string() + ": malformed BTSR header at byte offset " +
                      std::to_string(e.byte > 0 ? e.byte - 1 : 0));
  }
}

// ---------------------------------------------------------------------------
// EEG

namespace detail {

inline const Json& require_meta(const Json& meta, const std::string& key, const std::string& origin) {
  if (!meta.contains(key)) throw ValidationError(origin + ": missing meta key '" + key + "'");
  return meta.at(key);
}

inline std::vector<std::string> string_list(const Json& j, const std::string& key, const std::string& origin) {
  if (!j.is_array()) throw ValidationError(origin + ": meta '" + key + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& s : j) {
    if (!s.is_string()) throw ValidationError(origin + ": meta '" + key + "' must be an array of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

inline void require_unique(const std::vector<std::string>& names, const std::string& what) {
  std::set<std::string> seen;
  for (const auto& n : names)
    if (!seen.insert(n).second) throw ValidationError("duplicate " + what + " '" + n + "'");
}

}  // namespace detail

inline void validate(const EegRecording& rec) {
  require(rec.fs_hz > 0.0 && std::isfinite(rec.fs_hz), "EEG sampling rate must be positive");
  require(static_cast<std::size_t>(rec.data.rows()) == rec.channel_names.size(),
          "EEG has " + std::to_string(rec.data.rows()) + " data rows but " +
              std::to_string(rec.channel_names.size()) + " channel names");
  detail::require_unique(rec.channel_names, "channel name");
}

inline TensorFile eeg_to_tensor(const EegRecording& rec, DType dtype = DType::f64) {
  validate(rec);
  TensorFile t;
  t.dtype = dtype;
  t.shape = {static_cast<std::size_t>(rec.n_channels()), static_cast<std::size_t>(rec.n_samples())};
  t.meta = {{"fs_hz", rec.fs_hz}, {"channel_names", rec.channel_names}, {"subject_id", rec.subject_id}};
  t.values.resize(rec.data.size());
  for (Eigen::Index c = 0; c < rec.n_channels(); ++c)
    for (Eigen::Index s = 0; s < rec.n_samples(); ++s) t.values[c * rec.n_samples() + s] = rec.data(c, s);
  return t;
}

inline EegRecording eeg_from_tensor(const TensorFile& t, const std::string& origin = "<memory>") {
  if (t.shape.size() != 2)
    throw ValidationError(origin + ": EEG tensor must have shape [channels, samples], got rank " +
                          std::to_string(t.shape.size()));
  EegRecording rec;
  const auto& fs = detail::require_meta(t.meta, "fs_hz", origin);
  if (!fs.is_number()) throw ValidationError(origin + ": meta 'fs_hz' must be a number");
  rec.fs_hz = fs.get<double>();
  rec.channel_names = detail::string_list(detail::require_meta(t.meta, "channel_names", origin), "channel_names", origin);
  const auto& sid = detail::require_meta(t.meta, "subject_id", origin);
  if (!sid.is_string()) throw ValidationError(origin + ": meta 'subject_id' must be a string");
  rec.subject_id = sid.get<std::string>();

  const auto rows = static_cast<Eigen::Index>(t.shape[0]);
  const auto cols = static_cast<Eigen::Index>(t.shape[1]);
  rec.data.resize(rows, cols);
  for (Eigen::Index c = 0; c < rows; ++c)
    for (Eigen::Index s = 0; s < cols; ++s) rec.data(c, s) = t.values[c * cols + s];
  try {
    validate(rec);
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  return rec;
}

inline void write_eeg(const std::filesystem::path& path, const EegRecording& rec, DType dtype = DType::f64) {
  write_file_bytes(path, encode_btsr(eeg_to_tensor(rec, dtype)));
}

inline EegRecording read_eeg(const std::filesystem::path& path) {
  return eeg_from_tensor(read_tensor(path), path.string());
}

// ---------------------------------------------------------------------------
// word events (TSV)

inline void validate(const WordEventSequence& seq) {
  for (std::size_t k = 0; k < seq.events.size(); ++k) {
    const auto& ev = seq.events[k];
    require(ev.vector.size() == seq.dim, "word event " + std::to_string(k) + " has dimension " +
                                             std::to_string(ev.vector.size()) + ", expected " +
                                             std::to_string(seq.dim));
    require(std::isfinite(ev.onset_s) && ev.onset_s >= 0.0,
            "word event " + std::to_string(k) + " has a negative or non-finite onset");
    require(k == 0 || seq.events[k - 1].onset_s <= ev.onset_s,
            "word onsets decrease at event " + std::to_string(k));
    require(ev.token.find_first_of("\t\n") == std::string::npos && ev.pos_tag.find_first_of("\t\n") == std::string::npos,
            "word event " + std::to_string(k) + " contains a tab or newline");
  }
}

inline std::string format_word_events(const WordEventSequence& seq) {
  validate(seq);
  std::string out = "token\tonset_s\tpos";
  for (Eigen::Index d = 0; d < seq.dim; ++d) out += "\tv" + std::to_string(d);
  out += '\n';
  for (const auto& ev : seq.events) {
    out += ev.token;
    out += '\t';
    out += format_number(ev.onset_s);
    out += '\t';
    out += ev.pos_tag;
    for (Eigen::Index d = 0; d < seq.dim; ++d) {
      out += '\t';
      out += format_number(ev.vector[d]);
    }
    out += '\n';
  }
  return out;
}

inline WordEventSequence parse_word_events(std::string_view text, const std::string& origin = "<memory>") {
  const auto lines = split_lines(text);
  if (lines.empty()) throw FormatError(origin + ": missing header line");
  const auto header = split(lines[0], '\t');
  if (header.size() < 3 || header[0] != "token" || header[1] != "onset_s" || header[2] != "pos")
    throw FormatError(origin + ": line 1: header must start with token<TAB>onset_s<TAB>pos");
  WordEventSequence seq;
  seq.dim = static_cast<Eigen::Index>(header.size() - 3);
  for (Eigen::Index d = 0; d < seq.dim; ++d) {
    if (header[3 + d] != "v" + std::to_string(d))
      throw FormatError(origin + ": line 1: expected column v" + std::to_string(d) + ", found '" +
                        std::string(header[3 + d]) + "'");
  }
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const auto lineno = std::to_string(ln + 1);
    const auto fields = split(lines[ln], '\t');
    if (fields.size() != header.size())
      throw FormatError(origin + ": line " + lineno + ": expected " + std::to_string(header.size()) +
                        " fields, found " + std::to_string(fields.size()));
    WordEvent ev;
    ev.token = std::string(fields[0]);
    if (!parse_number(fields[1], ev.onset_s))
      throw FormatError(origin + ": line " + lineno + ": onset_s is not a number");
    if (ev.onset_s < 0.0) throw ValidationError(origin + ": line " + lineno + ": negative onset");
    if (!seq.events.empty() && ev.onset_s < seq.events.back().onset_s)
      throw ValidationError(origin + ": line " + lineno + ": onset " + std::string(fields[1]) +
                            " precedes the previous onset");
    ev.pos_tag = std::string(fields[2]);
    ev.vector.resize(seq.dim);
    for (Eigen::Index d = 0; d < seq.dim; ++d) {
      if (!parse_number(fields[3 + d], ev.vector[d]))
        throw FormatError(origin + ": line " + lineno + ": v" + std::to_string(d) + " is not a number");
    }
    seq.events.push_back(std::move(ev));
  }
  return seq;
}

inline WordEventSequence read_word_events(const std::filesystem::path& path) {
  return parse_word_events(read_file_bytes(path), path.string());
}

inline void write_word_events(const std::filesystem::path& path, const WordEventSequence& seq) {
  write_file_bytes(path, format_word_events(seq));
}

// ---------------------------------------------------------------------------
// channel layout (CSV)

inline ChannelLayout parse_channel_layout(std::string_view text, const std::string& origin = "<memory>") {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != "name,x,y") throw FormatError(origin + ": line 1: header must be name,x,y");
  ChannelLayout layout;
  std::set<std::string> seen;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const auto lineno = std::to_string(ln + 1);
    const auto f = split(lines[ln], ',');
    if (f.size() != 3) throw FormatError(origin + ": line " + lineno + ": expected 3 fields");
    LayoutEntry e;
    e.name = std::string(f[0]);
    if (!parse_number(f[1], e.x) || !parse_number(f[2], e.y))
      throw FormatError(origin + ": line " + lineno + ": non-numeric coordinate");
    if (!seen.insert(e.name).second)
      throw ValidationError(origin + ": line " + lineno + ": duplicate channel '" + e.name + "'");
    layout.entries.push_back(std::move(e));
  }
  return layout;
}

inline ChannelLayout read_channel_layout(const std::filesystem::path& path) {
  return parse_channel_layout(read_file_bytes(path), path.string());
}

inline std::string format_channel_layout(const ChannelLayout& layout) {
  std::string out = "name,x,y\n";
  for (const auto& e : layout.entries) {
    require(e.name.find_first_of(",\n") == std::string::npos, "channel name '" + e.name + "' contains a comma");
    out += e.name + "," + format_number(e.x) + "," + format_number(e.y) + "\n";
  }
  return out;
}

inline void write_channel_layout(const std::filesystem::path& path, const ChannelLayout& layout) {
  write_file_bytes(path, format_channel_layout(layout));
}

}  // namespace trf
