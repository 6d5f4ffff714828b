#pragma once

// PNG figures: line plots, heatmaps of 2D fields and scatter plots with a fit
// curve, drawn by a small rasterizer and written with libpng.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qlbm::plot {

/// Numeric CSV with a header row.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;  ///< empty cells are NaN

    std::vector<double> column(const std::string& name) const;
    bool has(const std::string& name) const;
};

/// Throws InvalidInput when the file is missing or has no data rows.
Table read_csv(const std::filesystem::path& path);

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct LinePlot {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    std::vector<Series> series;
    bool log_y = false;
};

struct Heatmap {
    std::string title;
    int nx = 0;
    int ny = 0;
    std::vector<double> values;  ///< x-major, values[x * ny + y]
};

struct ScatterPlot {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    Series points;
    std::optional<Series> fit;  ///< drawn as a line
    bool log_y = false;
};

void write_line_plot(const std::filesystem::path& path, const LinePlot& plot, int width = 900, int height = 600);
void write_heatmap(const std::filesystem::path& path, const Heatmap& map, int target_px = 600);
void write_scatter(const std::filesystem::path& path, const ScatterPlot& plot, int width = 900, int height = 600);

/// CSV front ends. The image is only written after the table has been read
/// and the requested columns found.
void plot_lines_csv(const std::filesystem::path& csv, const std::filesystem::path& out, const std::string& xcol,
                    const std::vector<std::string>& ycols, bool log_y = false);
void plot_heatmap_csv(const std::filesystem::path& csv, const std::filesystem::path& out, const std::string& column);

} // namespace qlbm::plot
