#include "humo/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "humo/errors.hpp"

namespace humo {

using nlohmann::json;

namespace {
constexpr char kMagic[4] = {'H', 'M', 'C', 'K'};

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is, const std::string& what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("checkpoint: truncated file while reading " + what);
  return v;
}
}  // namespace

const VectorXd& Checkpoint::get(const std::string& name) const {
  for (const auto& [n, v] : arrays)
    if (n == name) return v;
  throw IoError("checkpoint: missing array '" + name + "'");
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& [n, v] : arrays)
    if (n == name) return true;
  return false;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("checkpoint: cannot open '" + path + "' for writing");
  os.write(kMagic, 4);
  write_raw<std::uint32_t>(os, kFormatVersion);

  json header;
  header["kind"] = kind;
  header["meta"] = meta;
  header["rng_state"] = rng_state;
  json arr = json::array();
  for (const auto& [name, v] : arrays)
    arr.push_back({{"name", name}, {"size", static_cast<std::int64_t>(v.size())}});
  header["arrays"] = arr;
  const std::string htext = header.dump();
  write_raw<std::uint64_t>(os, htext.size());
  os.write(htext.data(), static_cast<std::streamsize>(htext.size()));

  for (const auto& [name, v] : arrays)
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(sizeof(double) * v.size()));
  if (!os) throw IoError("checkpoint: write failure on '" + path + "'");
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("checkpoint: bad magic in '" + path + "'");
  const auto version = read_raw<std::uint32_t>(is, "version");
  if (version != kFormatVersion)
    throw IoError("checkpoint: format_version " + std::to_string(version) +
                  " not supported (expected " + std::to_string(kFormatVersion) + ")");
  const auto hlen = read_raw<std::uint64_t>(is, "header length");
  std::string htext(hlen, '\0');
  is.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (!is) throw IoError("checkpoint: truncated header");
  json header;
  try {
    header = json::parse(htext);
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: corrupt header: ") + e.what());
  }

  Checkpoint ck;
  ck.kind = header.value("kind", "");
  ck.meta = header.value("meta", json::object());
  ck.rng_state = header.value("rng_state", "");
  for (const auto& aj : header.value("arrays", json::array())) {
    const std::string name = aj.at("name").get<std::string>();
    const auto size = aj.at("size").get<std::int64_t>();
    VectorXd v(size);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * size));
    if (!is) throw IoError("checkpoint: truncated payload for array '" + name + "'");
    ck.arrays.emplace_back(name, std::move(v));
  }
  return ck;
}

void save_adam(Checkpoint* ck, const std::string& prefix, const Adam& opt) {
  ck->add(prefix + ".m", opt.m);
  ck->add(prefix + ".v", opt.v);
  VectorXd scalars(5);
  scalars << static_cast<double>(opt.t), opt.lr, opt.beta1, opt.beta2, opt.eps;
  ck->add(prefix + ".state", scalars);
}

void load_adam(const Checkpoint& ck, const std::string& prefix, Adam* opt) {
  opt->m = ck.get(prefix + ".m");
  opt->v = ck.get(prefix + ".v");
  const VectorXd& s = ck.get(prefix + ".state");
  opt->t = static_cast<long>(s[0]);
  opt->lr = s[1];
  opt->beta1 = s[2];
  opt->beta2 = s[3];
  opt->eps = s[4];
}

}  // namespace humo
