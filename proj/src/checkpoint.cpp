#include "fdsc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace fdsc {

namespace {

constexpr char kMagic[4] = {'F', 'D', 'C', 'K'};
constexpr std::uint8_t kVersion = 1;

void put_u8(std::string& s, std::uint8_t v) { s.push_back(static_cast<char>(v)); }
void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& s, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_f64(std::string& s, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(s, bits);
}

struct Reader {
  const std::string& s;
  std::size_t pos = 0;
  std::uint8_t u8() {
    check(pos + 1 <= s.size(), "checkpoint: truncated");
    return static_cast<std::uint8_t>(s[pos++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | u8();
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | u8();
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str(std::size_t n) {
    check(pos + n <= s.size(), "checkpoint: truncated");
    std::string out = s.substr(pos, n);
    pos += n;
    return out;
  }
};

void write_config(std::string& buf, const ModelConfig& c) {
  put_u32(buf, static_cast<std::uint32_t>(c.n));
  put_u32(buf, static_cast<std::uint32_t>(c.m));
  put_f64(buf, c.alpha);
  put_f64(buf, c.beta);
  put_u8(buf, static_cast<std::uint8_t>(c.main_stages));
  put_u8(buf, static_cast<std::uint8_t>(c.hyper_stages));
  put_u8(buf, static_cast<std::uint8_t>(c.window));
  put_u8(buf, c.aq_enabled ? 1 : 0);
  put_u8(buf, c.wiring.h_to_l ? 1 : 0);
  put_u8(buf, c.wiring.m_to_l ? 1 : 0);
  put_u8(buf, c.wiring.h_to_m ? 1 : 0);
  put_u8(buf, c.ctsfrb_cascaded ? 1 : 0);
  put_f64(buf, c.lambda);
  put_u64(buf, c.init_seed);
}

ModelConfig read_config(Reader& r) {
  ModelConfig c;
  c.n = static_cast<int>(r.u32());
  c.m = static_cast<int>(r.u32());
  c.alpha = r.f64();
  c.beta = r.f64();
  c.main_stages = r.u8();
  c.hyper_stages = r.u8();
  c.window = r.u8();
  c.aq_enabled = r.u8() != 0;
  c.wiring.h_to_l = r.u8() != 0;
  c.wiring.m_to_l = r.u8() != 0;
  c.wiring.h_to_m = r.u8() != 0;
  c.ctsfrb_cascaded = r.u8() != 0;
  c.lambda = r.f64();
  c.init_seed = r.u64();
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "cannot open checkpoint: " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return data;
}

}  // namespace

template <typename T>
void save_checkpoint(const Model<T>& model, const std::string& path) {
  std::string buf;
  buf.append(kMagic, 4);
  put_u8(buf, kVersion);
  write_config(buf, model.config());
  const auto& params = model.params().all();
  put_u32(buf, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, var] : params) {
    put_u32(buf, static_cast<std::uint32_t>(name.size()));
    buf.append(name);
    put_u8(buf, static_cast<std::uint8_t>(var->val.rank()));
    for (int d = 0; d < var->val.rank(); ++d)
      put_u32(buf, static_cast<std::uint32_t>(var->val.dim(d)));
    for (std::int64_t i = 0; i < var->val.numel(); ++i)
      put_f64(buf, static_cast<double>(var->val[i]));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  check(out.good(), "cannot write checkpoint: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  check(out.good(), "short write on checkpoint: " + path);
}

ModelConfig peek_checkpoint_config(const std::string& path) {
  const std::string data = read_file(path);
  Reader r{data};
  check(r.str(4) == std::string(kMagic, 4), "not a checkpoint file: " + path);
  check(r.u8() == kVersion, "unsupported checkpoint version");
  return read_config(r);
}

template <typename T>
Model<T> load_checkpoint(const std::string& path) {
  const std::string data = read_file(path);
  Reader r{data};
  check(r.str(4) == std::string(kMagic, 4), "not a checkpoint file: " + path);
  check(r.u8() == kVersion, "unsupported checkpoint version");
  const ModelConfig cfg = read_config(r);
  Model<T> model(cfg);
  const std::uint32_t count = r.u32();
  check(count == model.params().all().size(),
        "checkpoint parameter count mismatch (wrong architecture?)");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.str(name_len);
    auto var = model.params().find(name);
    check(var != nullptr, "unknown parameter in checkpoint: " + name);
    const int rank = r.u8();
    check(rank == var->val.rank(), "parameter rank mismatch: " + name);
    std::int64_t numel = 1;
    for (int d = 0; d < rank; ++d) {
      const int dim = static_cast<int>(r.u32());
      check(dim == var->val.dim(d), "parameter shape mismatch: " + name);
      numel *= dim;
    }
    for (std::int64_t j = 0; j < numel; ++j)
      var->val[j] = static_cast<T>(r.f64());
  }
  check(r.pos == data.size(), "checkpoint has trailing bytes");
  return model;
}

template void save_checkpoint<float>(const Model<float>&, const std::string&);
template void save_checkpoint<double>(const Model<double>&, const std::string&);
template Model<float> load_checkpoint<float>(const std::string&);
template Model<double> load_checkpoint<double>(const std::string&);

}  // namespace fdsc
