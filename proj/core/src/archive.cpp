#include "dpgan/archive.hpp"

#include "dpgan/errors.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dpgan {
namespace {

constexpr char kMagic[8] = {'D', 'P', 'G', 'T', 'A', 'R', 'C', 'H'};

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError(fmt::format("{}: truncated archive", path.string()));
  return v;
}

}  // namespace

void TensorArchive::put(const std::string& name, Eigen::MatrixXd value) {
  entries_.insert_or_assign(name, std::move(value));
}

void TensorArchive::put_text(const std::string& name, std::string text) {
  entries_.insert_or_assign(name, std::move(text));
}

const Eigen::MatrixXd& TensorArchive::matrix(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end() || !std::holds_alternative<Eigen::MatrixXd>(it->second)) {
    throw FormatError(fmt::format("archive has no matrix entry '{}'", name));
  }
  return std::get<Eigen::MatrixXd>(it->second);
}

const std::string& TensorArchive::text(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end() || !std::holds_alternative<std::string>(it->second)) {
    throw FormatError(fmt::format("archive has no text entry '{}'", name));
  }
  return std::get<std::string>(it->second);
}

std::vector<std::string> TensorArchive::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

std::vector<std::string> TensorArchive::names_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (auto it = entries_.lower_bound(prefix); it != entries_.end() && it->first.starts_with(prefix); ++it) {
    out.push_back(it->first);
  }
  return out;
}

void TensorArchive::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kVersion);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [name, value] : entries_) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    if (const auto* m = std::get_if<Eigen::MatrixXd>(&value)) {
      write_pod<std::uint8_t>(out, 0);
      write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m->rows()));
      write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m->cols()));
      for (Eigen::Index i = 0; i < m->rows(); ++i) {
        for (Eigen::Index j = 0; j < m->cols(); ++j) write_pod<double>(out, (*m)(i, j));
      }
    } else {
      const auto& text = std::get<std::string>(value);
      write_pod<std::uint8_t>(out, 1);
      write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(text.size()));
      out.write(text.data(), static_cast<std::streamsize>(text.size()));
    }
  }
  if (!out) throw IoError(fmt::format("error while writing {}", path.string()));
}

TensorArchive TensorArchive::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(fmt::format("{}: not a tensor archive", path.string()));
  }
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw FormatError(fmt::format("{}: unsupported archive version {}", path.string(), version));
  }
  const auto count = read_pod<std::uint32_t>(in, path);
  TensorArchive archive;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto name_len = read_pod<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto kind = read_pod<std::uint8_t>(in, path);
    if (kind == 0) {
      const auto rows = read_pod<std::uint64_t>(in, path);
      const auto cols = read_pod<std::uint64_t>(in, path);
      Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = read_pod<double>(in, path);
      }
      archive.put(name, std::move(m));
    } else if (kind == 1) {
      const auto len = read_pod<std::uint64_t>(in, path);
      std::string text(len, '\0');
      in.read(text.data(), static_cast<std::streamsize>(len));
      if (!in) throw FormatError(fmt::format("{}: truncated archive", path.string()));
      archive.put_text(name, std::move(text));
    } else {
      throw FormatError(fmt::format("{}: unknown entry kind {} for '{}'", path.string(), kind, name));
    }
  }
  return archive;
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << fmt::format("{}", m(i, j));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError(fmt::format("{}: ragged row {}", path.string(), rows.size() + 1));
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return m;
}

}  // namespace dpgan
