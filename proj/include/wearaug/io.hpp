#pragma once

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wearaug/cnn/model.hpp"
#include "wearaug/dataset.hpp"
#include "wearaug/eval.hpp"
#include "wearaug/synth.hpp"

namespace wearaug::io {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path.string(), "write failed");
}

inline void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError(dir.string(), "cannot create directory");
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw IoError(where, "malformed number '" + s + "'");
  }
  return v;
}

inline std::string format_g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Window files: header "t,x,y,z"; t in seconds with 6 decimals, values with
// 9 significant digits.

inline std::string format_window(const Window& w) {
  std::string out = "t,x,y,z\n";
  out.reserve(w.length() * 48);
  char buf[128];
  for (std::size_t t = 0; t < w.length(); ++t) {
    std::snprintf(buf, sizeof buf, "%.6f,%.9g,%.9g,%.9g\n", static_cast<double>(t) / w.rate_hz(), w(t, 0), w(t, 1),
                  w(t, 2));
    out += buf;
  }
  return out;
}

inline void write_window(const fs::path& path, const Window& w) { write_file(path, format_window(w)); }

inline Window read_window(const fs::path& path, double rate_hz) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "t,x,y,z") throw IoError(path.string(), "missing 't,x,y,z' header");
  std::vector<double> values;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    const std::string where = path.string() + ":" + std::to_string(row);
    if (f.size() != 4) throw IoError(where, "expected 4 fields");
    for (int c = 1; c < 4; ++c) values.push_back(parse_double(f[c], where));
  }
  const std::size_t n = values.size() / kAxes;
  if (n < 2) throw IoError(path.string(), "window needs at least 2 samples");
  try {
    return Window(Tensor({n, kAxes}, std::move(values)), rate_hz);
  } catch (const InvalidArgument& e) {
    throw IoError(path.string(), e.what());
  }
}

// ---------------------------------------------------------------------------
// Dataset directories: manifest.csv with lines subject_id,label,path,rate_hz
// (path relative to the directory) plus one window file per record.

inline constexpr const char* kManifestName = "manifest.csv";

struct ManifestEntry {
  std::string subject;
  int label = kBrady;
  std::string path;
  double rate_hz = 0.0;
};

inline std::vector<ManifestEntry> read_manifest(const fs::path& file) {
  std::istringstream in(read_file(file));
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::string where = file.string() + ":" + std::to_string(row);
    const auto f = split(line, ',');
    if (f.size() != 4) throw IoError(where, "expected subject_id,label,path,rate_hz");
    ManifestEntry e;
    e.subject = f[0];
    try {
      e.label = parse_label(f[1]);
    } catch (const InvalidArgument& ex) {
      throw IoError(where, ex.what());
    }
    e.path = f[2];
    e.rate_hz = parse_double(f[3], where);
    out.push_back(e);
  }
  return out;
}

inline LabeledDataset read_dataset(const fs::path& dir) {
  LabeledDataset d;
  d.provenance = "dir:" + dir.string();
  for (const auto& e : read_manifest(dir / kManifestName)) {
    d.records.push_back({read_window(dir / e.path, e.rate_hz), e.label, e.subject});
  }
  return d;
}

/// Writes manifest.csv and windows/NNNNN.csv under `dir`.
inline void write_dataset(const fs::path& dir, const LabeledDataset& d) {
  ensure_directory(dir / "windows");
  std::string manifest;
  char name[32];
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    std::snprintf(name, sizeof name, "windows/%05zu.csv", i + 1);
    write_window(dir / name, r.window);
    manifest += r.subject + "," + label_name(r.label) + "," + name + "," + format_g9(r.window.rate_hz()) + "\n";
  }
  write_file(dir / kManifestName, manifest);
}

// ---------------------------------------------------------------------------
// Config files: "key = value" per line, '#' starts a comment. Unknown keys
// are rejected.

inline std::map<std::string, std::string> parse_key_values(const std::string& text, const std::string& source) {
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(row) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(row) + ": empty key");
    if (kv.count(key)) throw ConfigError(source + ":" + std::to_string(row) + ": duplicate key '" + key + "'");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

/// Applies config entries onto a TrainConfig (training, optimizer, batch
/// norm and augmentation keys).
inline void apply_config(const std::map<std::string, std::string>& kv, TrainConfig& c, const std::string& source) {
  auto number = [&](const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) throw ConfigError(source + ": bad value for '" + key + "': " + v);
    return x;
  };
  auto count = [&](const std::string& key, const std::string& v) {
    const double x = number(key, v);
    if (x < 0 || x != std::floor(x)) throw ConfigError(source + ": '" + key + "' must be a non-negative integer");
    return static_cast<std::size_t>(x);
  };
  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters{
      {"epochs", [&](auto& k, auto& v) { c.epochs = count(k, v); }},
      {"batch_size", [&](auto& k, auto& v) { c.batch_size = count(k, v); }},
      {"width_divisor", [&](auto& k, auto& v) { c.width_divisor = count(k, v); }},
      {"lr", [&](auto& k, auto& v) { c.adam.lr = number(k, v); }},
      {"beta1", [&](auto& k, auto& v) { c.adam.beta1 = number(k, v); }},
      {"beta2", [&](auto& k, auto& v) { c.adam.beta2 = number(k, v); }},
      {"adam_eps", [&](auto& k, auto& v) { c.adam.eps = number(k, v); }},
      {"bn_momentum", [&](auto& k, auto& v) { c.batchnorm.momentum = number(k, v); }},
      {"bn_eps", [&](auto& k, auto& v) { c.batchnorm.eps = number(k, v); }},
      {"jitter_sigma_of_sigma", [&](auto& k, auto& v) { c.augment.jitter_sigma_of_sigma = number(k, v); }},
      {"scale_mean", [&](auto& k, auto& v) { c.augment.scale_mean = number(k, v); }},
      {"scale_std", [&](auto& k, auto& v) { c.augment.scale_std = number(k, v); }},
      {"perm_seg_std", [&](auto& k, auto& v) { c.augment.perm_seg_std = number(k, v); }},
      {"perm_max_segments", [&](auto& k, auto& v) { c.augment.perm_max_segments = count(k, v); }},
      {"warp_amp_low", [&](auto& k, auto& v) { c.augment.warp_amp_low = number(k, v); }},
      {"warp_amp_high", [&](auto& k, auto& v) { c.augment.warp_amp_high = number(k, v); }},
      {"warp_freq_low", [&](auto& k, auto& v) { c.augment.warp_freq_low = number(k, v); }},
      {"warp_freq_high", [&](auto& k, auto& v) { c.augment.warp_freq_high = number(k, v); }},
      {"crop_fraction", [&](auto& k, auto& v) { c.augment.crop_fraction = number(k, v); }},
  };
  for (const auto& [key, value] : kv) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(source + ": unknown key '" + key + "'");
    it->second(key, value);
  }
  c.augment.validate();
  if (c.batch_size < 2) throw ConfigError(source + ": batch_size must be >= 2");
  if (c.width_divisor < 1) throw ConfigError(source + ": width_divisor must be >= 1");
}

inline TrainConfig load_train_config(const fs::path& file, TrainConfig base = {}) {
  apply_config(parse_key_values(read_file(file), file.string()), base, file.string());
  return base;
}

// ---------------------------------------------------------------------------
// Checkpoints:
//   "PDCNN1\0"
//   u32 header_bytes, then header of u32 words:
//     input_len, input_axes, classes, n_layers,
//     n_layers x (in_maps, out_maps, k_t, k_c, s_t, s_c, p_t, p_c),
//     n_tensors, n_tensors x (rank, dims...)
//   all tensors as f32, in ModelParams::all_tensors() order.
// Everything little-endian.

inline constexpr char kCheckpointMagic[7] = {'P', 'D', 'C', 'N', 'N', '1', '\0'};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f32(std::string& out, float f) {
  std::uint32_t bits = 0;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(out, bits);
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<unsigned char>(bytes_[pos_ + i])} << (8 * i);
    pos_ += 4;
    return v;
  }

  float f32() {
    const std::uint32_t bits = u32();
    float f = 0;
    std::memcpy(&f, &bits, sizeof f);
    return f;
  }

  void expect(const char* magic, std::size_t n) {
    need(n);
    if (bytes_.compare(pos_, n, magic, n) != 0) throw IoError(source_, "bad checkpoint magic");
    pos_ += n;
  }

  std::size_t position() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw IoError(source_, "truncated checkpoint");
  }

  const std::string& bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace detail

struct Checkpoint {
  cnn::Architecture arch;
  cnn::ModelParams params;
};

inline std::string encode_checkpoint(const cnn::Architecture& arch, const cnn::ModelParams& params) {
  std::string header;
  detail::put_u32(header, static_cast<std::uint32_t>(arch.input_len));
  detail::put_u32(header, static_cast<std::uint32_t>(arch.input_axes));
  detail::put_u32(header, static_cast<std::uint32_t>(arch.classes));
  detail::put_u32(header, static_cast<std::uint32_t>(arch.layers.size()));
  for (const auto& s : arch.layers) {
    for (std::size_t v : {s.in_maps, s.out_maps, s.kernel[0], s.kernel[1], s.stride[0], s.stride[1], s.pad[0], s.pad[1]}) {
      detail::put_u32(header, static_cast<std::uint32_t>(v));
    }
  }
  const auto tensors = params.all_tensors();
  detail::put_u32(header, static_cast<std::uint32_t>(tensors.size()));
  for (const Tensor* t : tensors) {
    detail::put_u32(header, static_cast<std::uint32_t>(t->rank()));
    for (std::size_t d : t->shape()) detail::put_u32(header, static_cast<std::uint32_t>(d));
  }
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  for (const Tensor* t : tensors) {
    for (double v : t->data()) detail::put_f32(out, static_cast<float>(v));
  }
  return out;
}

inline Checkpoint decode_checkpoint(const std::string& bytes, const std::string& source = "checkpoint") {
  detail::Reader r(bytes, source);
  r.expect(kCheckpointMagic, sizeof kCheckpointMagic);
  const std::uint32_t header_bytes = r.u32();
  const std::size_t header_start = r.position();
  Checkpoint ck;
  ck.arch.input_len = r.u32();
  ck.arch.input_axes = r.u32();
  ck.arch.classes = r.u32();
  const std::uint32_t n_layers = r.u32();
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    cnn::LayerSpec s;
    s.in_maps = r.u32();
    s.out_maps = r.u32();
    s.kernel = {r.u32(), r.u32()};
    s.stride = {r.u32(), r.u32()};
    s.pad = {r.u32(), r.u32()};
    ck.arch.layers.push_back(s);
  }
  try {
    ck.params = cnn::ModelParams::shaped_for(ck.arch);
  } catch (const InvalidArgument& e) {
    throw IoError(source, e.what());
  }
  auto tensors = ck.params.all_tensors();
  if (r.u32() != tensors.size()) throw IoError(source, "tensor count does not match architecture");
  for (Tensor* t : tensors) {
    const std::uint32_t rank = r.u32();
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    if (shape != t->shape()) throw IoError(source, "tensor shape " + shape_string(shape) + " does not match architecture");
  }
  if (r.position() - header_start != header_bytes) throw IoError(source, "header length mismatch");
  for (Tensor* t : tensors) {
    for (double& v : t->data()) v = static_cast<double>(r.f32());
  }
  if (!r.done()) throw IoError(source, "trailing bytes after tensors");
  return ck;
}

inline void save_checkpoint(const fs::path& path, const cnn::Architecture& arch, const cnn::ModelParams& params) {
  write_file(path, encode_checkpoint(arch, params));
}

inline Checkpoint load_checkpoint(const fs::path& path) { return decode_checkpoint(read_file(path), path.string()); }

}  // namespace wearaug::io
