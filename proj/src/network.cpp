#include "cgym/network.hpp"

#include <bit>
#include <fstream>
#include <sstream>

namespace cgym {

namespace {

constexpr char kMagic[] = "CGYM1";
constexpr std::size_t kMagicSize = 5;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t read(int width) {
    if (pos_ + static_cast<std::size_t>(width) > bytes_.size()) throw CheckpointError("checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    }
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(read(4)); }
  std::uint64_t u64() { return read(8); }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize(const ParameterBlock<float>& params) {
  const NetworkSpec& spec = params.spec;
  std::string out(kMagic, kMagicSize);
  put_u32(out, static_cast<std::uint32_t>(spec.input_dim));
  put_u32(out, static_cast<std::uint32_t>(spec.action_dim));
  put_u32(out, spec.has_value_head ? 1u : 0u);
  put_u32(out, static_cast<std::uint32_t>(spec.hidden.size()));
  for (int h : spec.hidden) put_u32(out, static_cast<std::uint32_t>(h));
  put_u64(out, static_cast<std::uint64_t>(params.size()));
  out.reserve(out.size() + 4 * params.size());
  for (Eigen::Index i = 0; i < params.values.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(params.values(i)));
  return out;
}

ParameterBlock<float> deserialize(const std::string& bytes) {
  if (bytes.size() < kMagicSize || bytes.compare(0, kMagicSize, kMagic, kMagicSize) != 0) {
    throw CheckpointError("bad checkpoint magic");
  }
  Reader in(bytes);
  in.skip(kMagicSize);
  NetworkSpec spec;
  spec.input_dim = static_cast<int>(in.u32());
  spec.action_dim = static_cast<int>(in.u32());
  spec.has_value_head = in.u32() != 0;
  const std::uint32_t hidden = in.u32();
  if (hidden > 64) throw CheckpointError("implausible hidden layer count");
  for (std::uint32_t i = 0; i < hidden; ++i) spec.hidden.push_back(static_cast<int>(in.u32()));
  const std::uint64_t count = in.u64();
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(e.what());
  }
  if (count != parameter_count(spec)) throw CheckpointError("parameter count does not match header dimensions");
  if (in.remaining() != 4 * count) throw CheckpointError("checkpoint truncated or oversized");
  ParameterBlock<float> params(spec);
  for (Eigen::Index i = 0; i < params.values.size(); ++i) params.values(i) = std::bit_cast<float>(in.u32());
  return params;
}

ParameterBlock<float> deserialize(const std::string& bytes, const NetworkSpec& expected) {
  ParameterBlock<float> params = deserialize(bytes);
  if (!(params.spec == expected)) throw CheckpointError("checkpoint dimensions do not match the expected network");
  return params;
}

void save_checkpoint(const ParameterBlock<float>& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const std::string bytes = serialize(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

ParameterBlock<float> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace cgym
