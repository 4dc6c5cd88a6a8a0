#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace dpgan {

/// Named-tensor container used for checkpoints, masks and imputed matrices.
///
/// Binary layout (little-endian):
///   "DPGTARCH" | u32 version | u32 entry count | entries...
///   entry: u32 name length | name bytes | u8 kind
///     kind 0 (matrix): u64 rows | u64 cols | rows*cols f64, row-major
///     kind 1 (text):   u64 length | bytes
/// Entries are written in name order, so equal contents give equal files.
class TensorArchive {
 public:
  static constexpr std::uint32_t kVersion = 1;

  void put(const std::string& name, Eigen::MatrixXd value);
  void put_text(const std::string& name, std::string text);

  bool contains(const std::string& name) const { return entries_.contains(name); }
  const Eigen::MatrixXd& matrix(const std::string& name) const;
  const std::string& text(const std::string& name) const;
  std::vector<std::string> names() const;
  /// Names starting with `prefix`, in order.
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;

  void save(const std::filesystem::path& path) const;
  static TensorArchive load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::variant<Eigen::MatrixXd, std::string>> entries_;
};

/// Dense matrix as CSV, one row per line, values printed round-trip exact.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

}  // namespace dpgan
