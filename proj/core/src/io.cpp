#include "specklerc/io.hpp"

#include <cstdio>
#include <fstream>

#include "specklerc/common.hpp"

namespace specklerc {

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t fnv1a64_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open: " + path);
    std::uint64_t h = 14695981039346656037ull;
    char buf[65536];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    return h;
}

void write_text(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out << content;
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const Eigen::MatrixXd& rows)
{
    if (columns.size() != static_cast<std::size_t>(rows.cols())) {
        throw ValidationError("csv header width does not match the data");
    }
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    for (std::size_t j = 0; j < columns.size(); ++j) {
        out << (j ? "," : "") << columns[j];
    }
    out << '\n';
    char buf[48];
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        for (Eigen::Index j = 0; j < rows.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.12g", rows(i, j));
            out << (j ? "," : "") << buf;
        }
        out << '\n';
    }
}

void write_basis_csv(const ModeBasis& basis, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out << "m,beta_rad_per_um,group_delay_ns";
    char buf[48];
    for (Eigen::Index j = 0; j < basis.grid.size(); ++j) {
        std::snprintf(buf, sizeof buf, "x%.4f", basis.grid(j));
        out << ',' << buf;
    }
    out << '\n';
    for (const GuidedMode& mode : basis.modes) {
        out << mode.index;
        std::snprintf(buf, sizeof buf, "%.15g", mode.beta);
        out << ',' << buf;
        std::snprintf(buf, sizeof buf, "%.12g", mode.group_delay_ns);
        out << ',' << buf;
        for (Eigen::Index j = 0; j < mode.profile.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.9g", mode.profile(j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

}  // namespace specklerc
