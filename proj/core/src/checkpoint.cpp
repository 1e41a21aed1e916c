#include "stdistill/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace stdistill {

namespace {
constexpr char kMagic[6] = {'S', 'T', 'C', 'K', '1', '\n'};
}

const Tensor& Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw StateError("checkpoint: missing tensor '" + name + "'");
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out.write(kMagic, 6);
  std::uint64_t count = ckpt.tensors.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  for (const auto& [name, t] : ckpt.tensors) {
    std::uint64_t name_len = name.size();
    out.write(reinterpret_cast<const char*>(&name_len), sizeof name_len);
    out.write(name.data(), std::streamsize(name.size()));
    std::uint64_t ndim = t.ndim();
    out.write(reinterpret_cast<const char*>(&ndim), sizeof ndim);
    for (std::size_t d : t.shape()) {
      std::uint64_t dim = d;
      out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
    }
    out.write(reinterpret_cast<const char*>(t.data().data()),
              std::streamsize(t.size() * sizeof(double)));
  }
  std::string meta = ckpt.meta.dump();
  std::uint64_t meta_len = meta.size();
  out.write(reinterpret_cast<const char*>(&meta_len), sizeof meta_len);
  out.write(meta.data(), std::streamsize(meta.size()));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open");
  auto fail = [&](const std::string& what) {
    throw ParseError(path + ": truncated while reading " + what);
  };
  char magic[6];
  in.read(magic, 6);
  if (in.gcount() != 6 || std::memcmp(magic, kMagic, 6) != 0)
    throw ParseError(path + ": bad magic");
  auto read_u64 = [&](const char* what) {
    std::uint64_t v;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (in.gcount() != sizeof v) fail(what);
    return v;
  };
  Checkpoint ckpt;
  std::uint64_t count = read_u64("tensor count");
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t name_len = read_u64("name length");
    std::string name(name_len, '\0');
    in.read(name.data(), std::streamsize(name_len));
    if (std::size_t(in.gcount()) != name_len) fail("tensor name");
    std::uint64_t ndim = read_u64("rank");
    Shape shape(ndim);
    for (auto& d : shape) d = read_u64("dimension");
    std::vector<double> data(shape_numel(shape));
    in.read(reinterpret_cast<char*>(data.data()),
            std::streamsize(data.size() * sizeof(double)));
    if (std::size_t(in.gcount()) != data.size() * sizeof(double))
      fail("tensor '" + name + "'");
    ckpt.tensors.emplace_back(std::move(name),
                              Tensor::from_data(std::move(shape), std::move(data)));
  }
  std::uint64_t meta_len = read_u64("metadata length");
  std::string meta(meta_len, '\0');
  in.read(meta.data(), std::streamsize(meta_len));
  if (std::size_t(in.gcount()) != meta_len) fail("metadata");
  try {
    ckpt.meta = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": metadata is not valid JSON: " + e.what());
  }
  return ckpt;
}

}  // namespace stdistill
