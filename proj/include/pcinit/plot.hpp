#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace pcinit {

enum class PlotKind { line, line_log_y };

PlotKind parse_plot_kind(std::string_view name);

/// Renders a variance-profile CSV (`layer,variance,n`) or a correlogram CSV
/// (`layer,bin_lo,bin_hi,pairs,r`, one series per layer) as a standalone SVG.
/// Output bytes depend only on the input. Throws InvalidArgument on an unknown schema.
std::string render_plot_svg(std::istream& csv, PlotKind kind, std::string_view title = {});

/// Writes `<csv stem>.svg` next to the CSV (or to `out` if given) and returns its path.
std::filesystem::path emit_plot(const std::filesystem::path& csv_path, PlotKind kind,
                                const std::filesystem::path& out = {});

}  // namespace pcinit
