#include "qlbm/plot.hpp"

#include "qlbm/errors.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace qlbm::plot {

namespace {

struct Rgb {
    unsigned char r, g, b;
};

constexpr Rgb kWhite{255, 255, 255};
constexpr Rgb kBlack{0, 0, 0};
constexpr Rgb kGrid{225, 225, 225};
constexpr std::array<Rgb, 6> kPalette{{{31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {255, 127, 14},
                                       {148, 103, 189}, {23, 190, 207}}};

// Column-major 5x7 glyphs, bit 0 at the top.
struct Glyph {
    char c;
    std::array<unsigned char, 5> cols;
};

constexpr Glyph kFont[] = {
    {'0', {0x3E, 0x51, 0x49, 0x45, 0x3E}}, {'1', {0x00, 0x42, 0x7F, 0x40, 0x00}},
    {'2', {0x42, 0x61, 0x51, 0x49, 0x46}}, {'3', {0x21, 0x41, 0x45, 0x4B, 0x31}},
    {'4', {0x18, 0x14, 0x12, 0x7F, 0x10}}, {'5', {0x27, 0x45, 0x45, 0x45, 0x39}},
    {'6', {0x3C, 0x4A, 0x49, 0x49, 0x30}}, {'7', {0x01, 0x71, 0x09, 0x05, 0x03}},
    {'8', {0x36, 0x49, 0x49, 0x49, 0x36}}, {'9', {0x06, 0x49, 0x49, 0x29, 0x1E}},
    {'A', {0x7E, 0x11, 0x11, 0x11, 0x7E}}, {'B', {0x7F, 0x49, 0x49, 0x49, 0x36}},
    {'C', {0x3E, 0x41, 0x41, 0x41, 0x22}}, {'D', {0x7F, 0x41, 0x41, 0x22, 0x1C}},
    {'E', {0x7F, 0x49, 0x49, 0x49, 0x41}}, {'F', {0x7F, 0x09, 0x09, 0x09, 0x01}},
    {'G', {0x3E, 0x41, 0x49, 0x49, 0x7A}}, {'H', {0x7F, 0x08, 0x08, 0x08, 0x7F}},
    {'I', {0x00, 0x41, 0x7F, 0x41, 0x00}}, {'J', {0x20, 0x40, 0x41, 0x3F, 0x01}},
    {'K', {0x7F, 0x08, 0x14, 0x22, 0x41}}, {'L', {0x7F, 0x40, 0x40, 0x40, 0x40}},
    {'M', {0x7F, 0x02, 0x0C, 0x02, 0x7F}}, {'N', {0x7F, 0x04, 0x08, 0x10, 0x7F}},
    {'O', {0x3E, 0x41, 0x41, 0x41, 0x3E}}, {'P', {0x7F, 0x09, 0x09, 0x09, 0x06}},
    {'Q', {0x3E, 0x41, 0x51, 0x21, 0x5E}}, {'R', {0x7F, 0x09, 0x19, 0x29, 0x46}},
    {'S', {0x46, 0x49, 0x49, 0x49, 0x31}}, {'T', {0x01, 0x01, 0x7F, 0x01, 0x01}},
    {'U', {0x3F, 0x40, 0x40, 0x40, 0x3F}}, {'V', {0x1F, 0x20, 0x40, 0x20, 0x1F}},
    {'W', {0x3F, 0x40, 0x38, 0x40, 0x3F}}, {'X', {0x63, 0x14, 0x08, 0x14, 0x63}},
    {'Y', {0x07, 0x08, 0x70, 0x08, 0x07}}, {'Z', {0x61, 0x51, 0x49, 0x45, 0x43}},
    {'-', {0x08, 0x08, 0x08, 0x08, 0x08}}, {'.', {0x00, 0x60, 0x60, 0x00, 0x00}},
    {'_', {0x40, 0x40, 0x40, 0x40, 0x40}}, {'+', {0x08, 0x08, 0x3E, 0x08, 0x08}},
    {'/', {0x20, 0x10, 0x08, 0x04, 0x02}}, {'(', {0x00, 0x1C, 0x22, 0x41, 0x00}},
    {')', {0x00, 0x41, 0x22, 0x1C, 0x00}}, {'=', {0x14, 0x14, 0x14, 0x14, 0x14}},
    {':', {0x00, 0x36, 0x36, 0x00, 0x00}}, {',', {0x00, 0x50, 0x30, 0x00, 0x00}},
};

class Canvas {
  public:
    Canvas(int w, int h) : w_(w), h_(h), px_(static_cast<std::size_t>(w) * h, kWhite) {}

    int width() const { return w_; }
    int height() const { return h_; }

    void set(int x, int y, Rgb c) {
        if (x >= 0 && y >= 0 && x < w_ && y < h_) px_[static_cast<std::size_t>(y) * w_ + x] = c;
    }

    void fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
        for (int y = std::max(y0, 0); y < std::min(y1, h_); ++y)
            for (int x = std::max(x0, 0); x < std::min(x1, w_); ++x) set(x, y, c);
    }

    void line(int x0, int y0, int x1, int y1, Rgb c, int thick = 1) {
        const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
        const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        for (int guard = 0; guard < 100000; ++guard) {
            fill_rect(x0 - thick / 2, y0 - thick / 2, x0 - thick / 2 + thick, y0 - thick / 2 + thick, c);
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    }

    void text(int x, int y, const std::string& s, Rgb c, int scale = 1) {
        for (char ch : s) {
            const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
            for (const auto& g : kFont) {
                if (g.c != up) continue;
                for (int col = 0; col < 5; ++col)
                    for (int row = 0; row < 7; ++row)
                        if (g.cols[static_cast<std::size_t>(col)] >> row & 1)
                            fill_rect(x + col * scale, y + row * scale, x + (col + 1) * scale, y + (row + 1) * scale, c);
                break;
            }
            x += 6 * scale;
        }
    }

    static int text_width(const std::string& s, int scale = 1) { return static_cast<int>(s.size()) * 6 * scale; }

    void save(const std::filesystem::path& path) const {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        FILE* fp = std::fopen(path.string().c_str(), "wb");
        if (!fp) throw std::runtime_error("cannot open " + path.string());
        png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        png_infop info = png ? png_create_info_struct(png) : nullptr;
        if (!png || !info || setjmp(png_jmpbuf(png))) {
            png_destroy_write_struct(&png, &info);
            std::fclose(fp);
            std::filesystem::remove(path);
            throw std::runtime_error("libpng failed writing " + path.string());
        }
        png_init_io(png, fp);
        png_set_IHDR(png, info, static_cast<png_uint_32>(w_), static_cast<png_uint_32>(h_), 8, PNG_COLOR_TYPE_RGB,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        std::vector<unsigned char> row(static_cast<std::size_t>(w_) * 3);
        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) {
                const Rgb& c = px_[static_cast<std::size_t>(y) * w_ + x];
                row[static_cast<std::size_t>(x) * 3] = c.r;
                row[static_cast<std::size_t>(x) * 3 + 1] = c.g;
                row[static_cast<std::size_t>(x) * 3 + 2] = c.b;
            }
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
    }

  private:
    int w_, h_;
    std::vector<Rgb> px_;
};

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

Rgb colormap(double t) {
    // Dark blue through teal and green to yellow.
    static constexpr std::array<Rgb, 5> anchors{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
    t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * (anchors.size() - 1);
    const auto k = std::min(static_cast<std::size_t>(t), anchors.size() - 2);
    const double f = t - static_cast<double>(k);
    const auto mix = [&](unsigned char a, unsigned char b) {
        return static_cast<unsigned char>(std::lround(a + f * (b - a)));
    };
    return {mix(anchors[k].r, anchors[k + 1].r), mix(anchors[k].g, anchors[k + 1].g), mix(anchors[k].b, anchors[k + 1].b)};
}

struct Axes {
    int left = 80, right = 180, top = 40, bottom = 60;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool log_y = false;
    int w = 0, h = 0;

    double ty(double y) const { return log_y ? std::log10(y) : y; }
    int px(double x) const { return left + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) * (w - left - right))); }
    int py(double y) const {
        return h - bottom - static_cast<int>(std::lround((ty(y) - ymin) / (ymax - ymin) * (h - top - bottom)));
    }
    bool usable(double x, double y) const { return std::isfinite(x) && std::isfinite(y) && (!log_y || y > 0.0); }
};

Axes make_axes(const std::vector<const Series*>& all, bool log_y, int w, int h) {
    Axes a;
    a.log_y = log_y;
    a.w = w;
    a.h = h;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto* s : all) {
        for (std::size_t k = 0; k < std::min(s->x.size(), s->y.size()); ++k) {
            if (!a.usable(s->x[k], s->y[k])) continue;
            xmin = std::min(xmin, s->x[k]);
            xmax = std::max(xmax, s->x[k]);
            ymin = std::min(ymin, a.ty(s->y[k]));
            ymax = std::max(ymax, a.ty(s->y[k]));
        }
    }
    if (!std::isfinite(xmin)) throw InvalidInput("plot: no finite data points");
    if (xmax == xmin) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax == ymin) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double pad = 0.05 * (ymax - ymin);
    a.xmin = xmin;
    a.xmax = xmax;
    a.ymin = ymin - pad;
    a.ymax = ymax + pad;
    return a;
}

void draw_frame(Canvas& c, const Axes& a, const std::string& title, const std::string& xlabel,
                const std::string& ylabel) {
    const int x0 = a.left, x1 = a.w - a.right, y0 = a.top, y1 = a.h - a.bottom;
    for (int k = 0; k <= 5; ++k) {
        const double fx = a.xmin + (a.xmax - a.xmin) * k / 5.0;
        const int gx = a.px(fx);
        c.line(gx, y0, gx, y1, kGrid);
        const auto lx = tick_label(fx);
        c.text(gx - Canvas::text_width(lx) / 2, y1 + 8, lx, kBlack);

        const double fy = a.ymin + (a.ymax - a.ymin) * k / 5.0;
        const int gy = y1 - static_cast<int>(std::lround(k / 5.0 * (y1 - y0)));
        c.line(x0, gy, x1, gy, kGrid);
        const auto ly = tick_label(a.log_y ? std::pow(10.0, fy) : fy);
        c.text(x0 - 6 - Canvas::text_width(ly), gy - 3, ly, kBlack);
    }
    c.line(x0, y0, x0, y1, kBlack);
    c.line(x0, y1, x1, y1, kBlack);
    c.line(x1, y0, x1, y1, kBlack);
    c.line(x0, y0, x1, y0, kBlack);
    c.text((x0 + x1 - Canvas::text_width(title, 2)) / 2, 10, title, kBlack, 2);
    c.text((x0 + x1 - Canvas::text_width(xlabel)) / 2, a.h - 24, xlabel, kBlack);
    c.text(4, y0 - 16, ylabel, kBlack);
}

void draw_series_line(Canvas& c, const Axes& a, const Series& s, Rgb col) {
    bool have = false;
    int lx = 0, ly = 0;
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
        if (!a.usable(s.x[k], s.y[k])) {
            have = false;
            continue;
        }
        const int x = a.px(s.x[k]), y = a.py(s.y[k]);
        if (have) c.line(lx, ly, x, y, col, 2);
        else c.fill_rect(x - 1, y - 1, x + 2, y + 2, col);
        lx = x;
        ly = y;
        have = true;
    }
}

void legend(Canvas& c, const Axes& a, const std::vector<std::pair<std::string, Rgb>>& items) {
    int y = a.top + 6;
    const int x = a.w - a.right + 12;
    for (const auto& [label, col] : items) {
        c.fill_rect(x, y + 2, x + 16, y + 5, col);
        c.text(x + 22, y, label, kBlack);
        y += 14;
    }
}

} // namespace

std::vector<double> Table::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw InvalidInput("CSV has no column '" + name + "'");
    const auto k = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(k < r.size() ? r[k] : std::numeric_limits<double>::quiet_NaN());
    return out;
}

bool Table::has(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
}

Table read_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw InvalidInput("cannot open CSV " + path.string());
    Table t;
    std::string line;
    if (!std::getline(is, line) || line.empty()) throw InvalidInput("CSV " + path.string() + " is empty");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
    }
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            if (cell.empty()) {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
            }
        }
        if (!line.empty() && line.back() == ',') row.push_back(std::numeric_limits<double>::quiet_NaN());
        t.rows.push_back(std::move(row));
    }
    if (t.rows.empty()) throw InvalidInput("CSV " + path.string() + " has no data rows");
    return t;
}

void write_line_plot(const std::filesystem::path& path, const LinePlot& plot, int width, int height) {
    std::vector<const Series*> all;
    for (const auto& s : plot.series) all.push_back(&s);
    const Axes a = make_axes(all, plot.log_y, width, height);
    Canvas c(width, height);
    draw_frame(c, a, plot.title, plot.xlabel, plot.ylabel);
    std::vector<std::pair<std::string, Rgb>> items;
    for (std::size_t k = 0; k < plot.series.size(); ++k) {
        const Rgb col = kPalette[k % kPalette.size()];
        draw_series_line(c, a, plot.series[k], col);
        items.emplace_back(plot.series[k].label, col);
    }
    legend(c, a, items);
    c.save(path);
}

void write_scatter(const std::filesystem::path& path, const ScatterPlot& plot, int width, int height) {
    std::vector<const Series*> all{&plot.points};
    if (plot.fit) all.push_back(&*plot.fit);
    const Axes a = make_axes(all, plot.log_y, width, height);
    Canvas c(width, height);
    draw_frame(c, a, plot.title, plot.xlabel, plot.ylabel);
    for (std::size_t k = 0; k < std::min(plot.points.x.size(), plot.points.y.size()); ++k) {
        if (!a.usable(plot.points.x[k], plot.points.y[k])) continue;
        const int x = a.px(plot.points.x[k]), y = a.py(plot.points.y[k]);
        c.fill_rect(x - 2, y - 2, x + 3, y + 3, kPalette[0]);
    }
    std::vector<std::pair<std::string, Rgb>> items{{plot.points.label, kPalette[0]}};
    if (plot.fit) {
        draw_series_line(c, a, *plot.fit, kPalette[1]);
        items.emplace_back(plot.fit->label, kPalette[1]);
    }
    legend(c, a, items);
    c.save(path);
}

void write_heatmap(const std::filesystem::path& path, const Heatmap& map, int target_px) {
    if (map.nx <= 0 || map.ny <= 0 || map.values.size() != static_cast<std::size_t>(map.nx) * map.ny)
        throw InvalidInput("heatmap: value count does not match the grid");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : map.values) {
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!std::isfinite(lo)) throw InvalidInput("heatmap: no finite values");
    const double span = hi > lo ? hi - lo : 1.0;
    const int cell = std::max(1, target_px / std::max(map.nx, map.ny));
    const int left = 20, top = 40, bar = 100;
    const int w = left + map.nx * cell + bar, h = top + map.ny * cell + 20;
    Canvas c(w, h);
    c.text(left, 12, map.title, kBlack, 2);
    for (int x = 0; x < map.nx; ++x) {
        for (int y = 0; y < map.ny; ++y) {
            const double v = map.values[static_cast<std::size_t>(x) * map.ny + y];
            // y grows upwards in the image
            const int py = top + (map.ny - 1 - y) * cell;
            c.fill_rect(left + x * cell, py, left + (x + 1) * cell, py + cell, colormap((v - lo) / span));
        }
    }
    const int bx = left + map.nx * cell + 15;
    const int bh = map.ny * cell;
    for (int k = 0; k < bh; ++k) c.fill_rect(bx, top + k, bx + 16, top + k + 1, colormap(1.0 - k / double(std::max(bh - 1, 1))));
    c.text(bx + 20, top, tick_label(hi), kBlack);
    c.text(bx + 20, top + bh - 7, tick_label(lo), kBlack);
    c.save(path);
}

void plot_lines_csv(const std::filesystem::path& csv, const std::filesystem::path& out, const std::string& xcol,
                    const std::vector<std::string>& ycols, bool log_y) {
    const Table t = read_csv(csv);
    LinePlot p;
    p.title = csv.stem().string();
    p.xlabel = xcol;
    p.log_y = log_y;
    const auto x = t.column(xcol);
    std::vector<std::string> cols = ycols;
    if (cols.empty())
        for (const auto& c : t.columns)
            if (c != xcol) cols.push_back(c);
    for (const auto& yc : cols) p.series.push_back({yc, x, t.column(yc)});
    if (cols.size() == 1) p.ylabel = cols.front();
    write_line_plot(out, p);
}

void plot_heatmap_csv(const std::filesystem::path& csv, const std::filesystem::path& out, const std::string& column) {
    const Table t = read_csv(csv);
    const auto xs = t.column("x");
    const auto ys = t.column("y");
    const auto vs = t.column(column);
    int nx = 0, ny = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        nx = std::max(nx, static_cast<int>(xs[k]) + 1);
        ny = std::max(ny, static_cast<int>(ys[k]) + 1);
    }
    Heatmap h{csv.stem().string() + " " + column, nx, ny,
              std::vector<double>(static_cast<std::size_t>(nx) * ny, std::numeric_limits<double>::quiet_NaN())};
    for (std::size_t k = 0; k < xs.size(); ++k)
        h.values[static_cast<std::size_t>(xs[k]) * ny + static_cast<std::size_t>(ys[k])] = vs[k];
    write_heatmap(out, h);
}

} // namespace qlbm::plot
