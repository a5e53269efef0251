#include "unfilter/archive.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>

#include "unfilter/errors.hpp"

namespace unfilter {

namespace {

constexpr char kMagic[8] = {'U', 'N', 'F', 'T', 'E', 'N', 'S', '1'};

template <class T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <class T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t at) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(bytes[at + i]) << (8 * i);
  return v;
}

std::string dtype_name(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return "float32";
    case torch::kFloat64: return "float64";
    case torch::kInt64: return "int64";
    default: throw CheckpointError("unsupported tensor dtype " + std::string(c10::toString(t)));
  }
}

torch::ScalarType dtype_from(const std::string& s) {
  if (s == "float32") return torch::kFloat32;
  if (s == "float64") return torch::kFloat64;
  if (s == "int64") return torch::kInt64;
  throw CheckpointError("unknown tensor dtype '" + s + "'");
}

}  // namespace

void TensorArchive::add(const std::string& name, const torch::Tensor& t) {
  for (auto& [n, existing] : tensors_) {
    if (n == name) throw CheckpointError("duplicate tensor key '" + name + "'");
  }
  dtype_name(t.scalar_type());
  tensors_.emplace_back(name, t.detach().to(torch::kCPU).contiguous().clone());
}

bool TensorArchive::contains(const std::string& name) const {
  for (const auto& [n, t] : tensors_) {
    if (n == name) return true;
  }
  return false;
}

const torch::Tensor& TensorArchive::get(const std::string& name) const {
  for (const auto& [n, t] : tensors_) {
    if (n == name) return t;
  }
  throw CheckpointError("archive has no tensor '" + name + "'");
}

std::vector<std::uint8_t> TensorArchive::serialize() const {
  nlohmann::json header;
  header["meta"] = meta;
  auto index = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors_) {
    const std::uint64_t nbytes = t.numel() * t.element_size();
    index.push_back({{"name", name},
                     {"dtype", dtype_name(t.scalar_type())},
                     {"shape", t.sizes().vec()},
                     {"offset", offset},
                     {"nbytes", nbytes}});
    offset += nbytes;
  }
  header["tensors"] = index;
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + offset);
  for (const auto& [name, t] : tensors_) {
    const auto* p = static_cast<const std::uint8_t*>(t.data_ptr());
    out.insert(out.end(), p, p + t.numel() * t.element_size());
  }
  return out;
}

TensorArchive TensorArchive::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a tensor archive (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(bytes, 8);
  if (version != kVersion) {
    throw CheckpointError("unsupported archive version " + std::to_string(version) + " (expected " +
                          std::to_string(kVersion) + ")");
  }
  const auto header_len = get_le<std::uint64_t>(bytes, 12);
  if (20 + header_len > bytes.size()) throw CheckpointError("truncated archive header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 20, bytes.begin() + 20 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt archive header: ") + e.what());
  }
  const std::size_t payload = 20 + header_len;

  TensorArchive ar;
  try {
    ar.meta = header.at("meta");
    for (const auto& entry : header.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      const auto dtype = dtype_from(entry.at("dtype").get<std::string>());
      const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto nbytes = entry.at("nbytes").get<std::uint64_t>();
      if (payload + offset + nbytes > bytes.size()) {
        throw CheckpointError("truncated archive payload at tensor '" + name + "'");
      }
      auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype));
      if (static_cast<std::uint64_t>(t.numel() * t.element_size()) != nbytes) {
        throw CheckpointError("tensor '" + name + "' byte count does not match its shape");
      }
      std::memcpy(t.data_ptr(), bytes.data() + payload + offset, nbytes);
      ar.tensors_.emplace_back(name, std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt archive index: ") + e.what());
  }
  return ar;
}

void TensorArchive::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

TensorArchive TensorArchive::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("crypto", "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

void add_module_state(TensorArchive& ar, const std::string& prefix, const torch::nn::Module& module) {
  for (const auto& p : module.named_parameters(/*recurse=*/true)) ar.add(prefix + p.key(), p.value());
  for (const auto& b : module.named_buffers(/*recurse=*/true)) ar.add(prefix + b.key(), b.value());
}

void load_module_state(const TensorArchive& ar, const std::string& prefix, torch::nn::Module& module) {
  torch::NoGradGuard no_grad;
  auto copy_into = [&](const std::string& key, torch::Tensor& dst) {
    const auto& src = ar.get(prefix + key);
    if (src.sizes() != dst.sizes()) {
      throw CheckpointError("shape mismatch for '" + prefix + key + "': stored " +
                            c10::str(src.sizes()) + ", expected " + c10::str(dst.sizes()));
    }
    dst.copy_(src);
  };
  for (auto& p : module.named_parameters(true)) copy_into(p.key(), p.value());
  for (auto& b : module.named_buffers(true)) copy_into(b.key(), b.value());
}

}  // namespace unfilter
