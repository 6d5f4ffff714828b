#include "qlbm/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace qlbm::io {

namespace {

static_assert(std::endian::native == std::endian::little, "container IO assumes a little-endian host");

template <typename T> void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T> T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, mode);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return os;
}

} // namespace

void write_container(const std::filesystem::path& path, const ContainerHeader& header,
                     std::span<const double> payload) {
    auto os = open_out(path, std::ios::binary | std::ios::trunc);
    os.write("QLBM", 4);
    put<std::uint16_t>(os, header.version);
    put<std::uint16_t>(os, static_cast<std::uint16_t>(header.kind));
    put<std::uint32_t>(os, header.nx);
    put<std::uint32_t>(os, header.ny);
    os.write(reinterpret_cast<const char*>(payload.data()),
             static_cast<std::streamsize>(payload.size_bytes()));
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::vector<double> read_container(const std::filesystem::path& path, ContainerHeader& header) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "QLBM", 4) != 0)
        throw std::runtime_error(path.string() + ": not a QLBM container");
    header.version = get<std::uint16_t>(is);
    header.kind = static_cast<PayloadKind>(get<std::uint16_t>(is));
    header.nx = get<std::uint32_t>(is);
    header.ny = get<std::uint32_t>(is);
    if (!is) throw std::runtime_error(path.string() + ": truncated header");
    if (header.version != kFormatVersion)
        throw std::runtime_error(path.string() + ": unsupported version " +
                                 std::to_string(header.version));
    std::size_t count = static_cast<std::size_t>(header.nx) * header.ny;
    if (header.kind == PayloadKind::Field) count *= lbm::kQ;
    std::vector<double> payload(count);
    is.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!is) throw std::runtime_error(path.string() + ": truncated payload");
    return payload;
}

void write_field_binary(const std::filesystem::path& path, const lbm::DistributionField& field) {
    ContainerHeader h;
    h.kind = PayloadKind::Field;
    h.nx = static_cast<std::uint32_t>(field.nx());
    h.ny = static_cast<std::uint32_t>(field.ny());
    write_container(path, h, field.raw());
}

lbm::DistributionField read_field_binary(const std::filesystem::path& path) {
    ContainerHeader h;
    const auto payload = read_container(path, h);
    if (h.kind != PayloadKind::Field) throw std::runtime_error(path.string() + ": not a field file");
    lbm::DistributionField field(static_cast<int>(h.nx), static_cast<int>(h.ny));
    std::copy(payload.begin(), payload.end(), field.raw().begin());
    return field;
}

void write_field_csv(const std::filesystem::path& path, const lbm::DistributionField& field) {
    auto os = open_out(path, std::ios::trunc);
    os.precision(17);
    os << "x,y,f0,f1,f2,f3,f4,f5,f6,f7,f8\n";
    for (int x = 0; x < field.nx(); ++x) {
        for (int y = 0; y < field.ny(); ++y) {
            os << x << ',' << y;
            for (int i = 0; i < lbm::kQ; ++i) os << ',' << field.at(i, x, y);
            os << '\n';
        }
    }
}

void write_macro_csv(const std::filesystem::path& path, const lbm::MacroField& macro) {
    auto os = open_out(path, std::ios::trunc);
    os.precision(17);
    os << "x,y,rho,ux,uy\n";
    for (int x = 0; x < macro.nx; ++x) {
        for (int y = 0; y < macro.ny; ++y) {
            const auto k = macro.index(x, y);
            os << x << ',' << y << ',' << macro.rho[k] << ',' << macro.ux[k] << ',' << macro.uy[k]
               << '\n';
        }
    }
}

} // namespace qlbm::io
