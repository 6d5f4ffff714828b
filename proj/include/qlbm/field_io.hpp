#pragma once

// Binary and CSV export of distribution fields and macroscopic snapshots.
//
// Binary layout (little-endian):
//   bytes 0-3   magic "QLBM"
//   bytes 4-5   version (u16)
//   bytes 6-7   payload kind (u16): 0 = distribution field, 1 = dataset
//   bytes 8-11  nx (u32)   (record count for datasets)
//   bytes 12-15 ny (u32)   (doubles per record for datasets)
//   payload     f64 values; fields are channel-major [9][nx][ny]

#include "qlbm/lattice.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace qlbm::io {

inline constexpr std::uint16_t kFormatVersion = 1;

enum class PayloadKind : std::uint16_t { Field = 0, Dataset = 1 };

struct ContainerHeader {
    std::uint16_t version = kFormatVersion;
    PayloadKind kind = PayloadKind::Field;
    std::uint32_t nx = 0;
    std::uint32_t ny = 0;
};

/// Writes header + payload. Throws std::runtime_error on IO failure.
void write_container(const std::filesystem::path& path, const ContainerHeader& header,
                     std::span<const double> payload);

/// Reads a container; the payload length is checked against the header.
std::vector<double> read_container(const std::filesystem::path& path, ContainerHeader& header);

void write_field_binary(const std::filesystem::path& path, const lbm::DistributionField& field);
lbm::DistributionField read_field_binary(const std::filesystem::path& path);

/// One row per site: x,y,f0..f8.
void write_field_csv(const std::filesystem::path& path, const lbm::DistributionField& field);

/// One row per site: x,y,rho,ux,uy.
void write_macro_csv(const std::filesystem::path& path, const lbm::MacroField& macro);

} // namespace qlbm::io
