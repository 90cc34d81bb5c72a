#include "rcm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rcm {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blob is little-endian float64");

namespace {
constexpr const char* kMagic = "RCM-CKPT-1";
}

bool Checkpoint::has_meta(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return true;
  return false;
}

const std::string& Checkpoint::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  throw std::runtime_error("checkpoint: missing meta key '" + key + "'");
}

long long Checkpoint::meta_int(const std::string& key) const {
  return std::stoll(meta_value(key));
}

double Checkpoint::meta_double(const std::string& key) const {
  return std::stod(meta_value(key));
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out << kMagic << '\n';
  for (const auto& [k, v] : ckpt.meta) {
    if (k.find(' ') != std::string::npos || k.find('\n') != std::string::npos)
      throw std::invalid_argument("checkpoint: meta key '" + k + "' contains whitespace");
    if (v.find('\n') != std::string::npos)
      throw std::invalid_argument("checkpoint: meta value for '" + k + "' contains newline");
    out << "meta " << k << ' ' << v << '\n';
  }
  std::size_t total = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    if (name.find(' ') != std::string::npos)
      throw std::invalid_argument("checkpoint: tensor name '" + name + "' contains space");
    out << "tensor " << name;
    out << ' ' << t.rank();
    for (std::size_t d : t.shape()) out << ' ' << d;
    out << '\n';
    total += t.numel();
  }
  out << "data " << total << '\n';
  for (const auto& [name, t] : ckpt.tensors)
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.numel() * sizeof(double)));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw std::runtime_error("checkpoint: " + path + " is not a " + kMagic + " file");
  Checkpoint ckpt;
  struct Entry {
    std::string name;
    Shape shape;
  };
  std::vector<Entry> entries;
  std::size_t declared = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      ckpt.meta.emplace_back(key, value);
    } else if (tag == "tensor") {
      Entry e;
      std::size_t rank = 0;
      ls >> e.name >> rank;
      if (rank < 1 || rank > 2)
        throw std::runtime_error("checkpoint: tensor " + e.name + " has rank " +
                                 std::to_string(rank));
      e.shape.resize(rank);
      for (std::size_t i = 0; i < rank; ++i) ls >> e.shape[i];
      if (!ls) throw std::runtime_error("checkpoint: malformed tensor line: " + line);
      entries.push_back(std::move(e));
    } else if (tag == "data") {
      ls >> declared;
      break;
    } else {
      throw std::runtime_error("checkpoint: unexpected header line: " + line);
    }
  }
  std::size_t total = 0;
  for (const Entry& e : entries) {
    std::size_t n = 1;
    for (std::size_t d : e.shape) n *= d;
    total += n;
  }
  if (total != declared)
    throw std::runtime_error("checkpoint: data size " + std::to_string(declared) +
                             " does not match tensor directory total " +
                             std::to_string(total));
  for (const Entry& e : entries) {
    std::size_t n = 1;
    for (std::size_t d : e.shape) n *= d;
    std::vector<double> values(n);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in)
      throw std::runtime_error("checkpoint: truncated blob reading tensor " + e.name);
    ckpt.tensors.emplace_back(e.name, param(e.shape, std::move(values)));
  }
  return ckpt;
}

}  // namespace rcm
