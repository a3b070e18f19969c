// maskpred/checkpoint.cc

// Copyright 2026  The maskpred authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "maskpred/checkpoint.h"

#include <cstring>
#include <map>
#include <sstream>

namespace maskpred {

namespace {

constexpr char kMagic[8] = {'M', 'P', 'C', 'K', 'P', 'T', '0', '1'};

void append_u32(std::string* buf, uint32_t v) {
  char b[4];
  b[0] = static_cast<char>(v & 0xff);
  b[1] = static_cast<char>((v >> 8) & 0xff);
  b[2] = static_cast<char>((v >> 16) & 0xff);
  b[3] = static_cast<char>((v >> 24) & 0xff);
  buf->append(b, 4);
}

void append_tensor(std::string* buf, const std::string& name, const Mat& m) {
  append_u32(buf, static_cast<uint32_t>(name.size()));
  buf->append(name);
  append_u32(buf, 2);
  append_u32(buf, static_cast<uint32_t>(m.rows()));
  append_u32(buf, static_cast<uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      float f = static_cast<float>(m(r, c));
      char b[4];
      std::memcpy(b, &f, 4);
      buf->append(b, 4);
    }
  }
}

class Reader {
 public:
  explicit Reader(const std::vector<char>& bytes) : bytes_(bytes) {}

  void raw(void* out, size_t n) {
    if (pos_ + n > bytes_.size())
      throw FormatError("checkpoint truncated");
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  uint32_t u32() {
    unsigned char b[4];
    raw(b, 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) |
           (static_cast<uint32_t>(b[3]) << 24);
  }
  std::string str(size_t n) {
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<char>& bytes_;
  size_t pos_ = 0;
};

}  // namespace

EncoderModel make_model(const EncoderConfig& config, uint64_t seed) {
  return EncoderModel{config, init_parameters(config, seed)};
}

std::string encoder_config_to_text(const EncoderConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "num_layers=" << c.num_layers << "\n"
     << "input_dim=" << c.input_dim << "\n"
     << "hidden_dim=" << c.hidden_dim << "\n"
     << "num_heads=" << c.num_heads << "\n"
     << "ffn_dim=" << c.ffn_dim << "\n"
     << "downsample=" << c.downsample << "\n"
     << "num_buckets=" << c.num_buckets << "\n"
     << "max_distance=" << c.max_distance << "\n"
     << "vocab_size=" << c.vocab_size << "\n"
     << "dropout=" << c.dropout << "\n"
     << "head_kind=" << to_string(c.head_kind) << "\n";
  return os.str();
}

EncoderConfig encoder_config_from_text(const std::string& text) {
  EncoderConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("checkpoint config: bad line: " + line);
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    try {
      if (key == "num_layers") c.num_layers = std::stoi(value);
      else if (key == "input_dim") c.input_dim = std::stoi(value);
      else if (key == "hidden_dim") c.hidden_dim = std::stoi(value);
      else if (key == "num_heads") c.num_heads = std::stoi(value);
      else if (key == "ffn_dim") c.ffn_dim = std::stoi(value);
      else if (key == "downsample") c.downsample = std::stoi(value);
      else if (key == "num_buckets") c.num_buckets = std::stoi(value);
      else if (key == "max_distance") c.max_distance = std::stoi(value);
      else if (key == "vocab_size") c.vocab_size = std::stoi(value);
      else if (key == "dropout") c.dropout = std::stod(value);
      else if (key == "head_kind") c.head_kind = head_kind_from_string(value);
      else throw FormatError("checkpoint config: unknown key: " + key);
    } catch (const std::invalid_argument&) {
      throw FormatError("checkpoint config: bad value for " + key);
    }
  }
  c.validate();
  return c;
}

void save_checkpoint(const EncoderModel& model,
                     const std::filesystem::path& path) {
  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  std::string config_text = encoder_config_to_text(model.config);
  append_u32(&buf, static_cast<uint32_t>(config_text.size()));
  buf.append(config_text);

  uint32_t count = 0;
  model.params.for_each([&count](const std::string&, const Mat&) { ++count; });
  append_u32(&buf, count);
  model.params.for_each([&buf](const std::string& name, const Mat& m) {
    append_tensor(&buf, name, m);
  });
  write_file_bytes(path, buf.data(), buf.size());
}

EncoderModel load_checkpoint(const std::filesystem::path& path) {
  std::vector<char> bytes = read_file_bytes(path);
  Reader reader(bytes);
  char magic[8];
  reader.raw(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError("checkpoint: bad magic: " + path.string());

  EncoderModel model;
  model.config = encoder_config_from_text(reader.str(reader.u32()));
  model.params = init_parameters(model.config, 0);

  uint32_t count = reader.u32();
  std::map<std::string, Mat> tensors;
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = reader.str(reader.u32());
    uint32_t rank = reader.u32();
    if (rank != 2) throw FormatError("checkpoint: unsupported rank");
    uint32_t rows = reader.u32();
    uint32_t cols = reader.u32();
    Mat m(rows, cols);
    for (uint32_t r = 0; r < rows; ++r) {
      for (uint32_t c = 0; c < cols; ++c) {
        float f;
        reader.raw(&f, 4);
        m(r, c) = static_cast<double>(f);
      }
    }
    if (!tensors.emplace(std::move(name), std::move(m)).second)
      throw FormatError("checkpoint: duplicate tensor");
  }
  if (!reader.done()) throw FormatError("checkpoint: trailing bytes");

  size_t used = 0;
  model.params.for_each([&](const std::string& name, Mat& dst) {
    auto it = tensors.find(name);
    if (it == tensors.end())
      throw FormatError("checkpoint: missing tensor " + name);
    if (it->second.rows() != dst.rows() || it->second.cols() != dst.cols())
      throw FormatError("checkpoint: shape mismatch for " + name);
    dst = it->second;
    ++used;
  });
  if (used != tensors.size())
    throw FormatError("checkpoint: unexpected extra tensors");
  return model;
}

std::string frontend_hash(const EncoderModel& model) {
  std::string buf;
  model.params.for_each([&buf](const std::string& name, const Mat& m) {
    if (is_frontend_tensor(name)) append_tensor(&buf, name, m);
  });
  return hash_hex(fnv1a64(buf.data(), buf.size()));
}

std::string describe_checkpoint(const std::filesystem::path& path) {
  std::vector<char> bytes = read_file_bytes(path);
  Reader reader(bytes);
  char magic[8];
  reader.raw(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError("checkpoint: bad magic: " + path.string());
  std::string config_text = reader.str(reader.u32());
  std::ostringstream os;
  os << "checkpoint " << path.string() << "\n";
  std::istringstream in(config_text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) os << "  " << line << "\n";
  os << "  file_hash: " << hash_file(path) << "\n";
  return os.str();
}

}  // namespace maskpred
