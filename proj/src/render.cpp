#include "h2s/render.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace h2s {

const std::vector<std::string>& default_palette() {
    static const std::vector<std::string> colors = {
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
        "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors;
}

namespace {

std::string fmt(double v) {
    if (v == 0.0) v = 0.0;  // normalize -0
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 3);
    return std::string(buf, res.ptr);
}

class SvgBuilder {
public:
    SvgBuilder(double width, double height) {
        buf_ += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        buf_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) +
                "\" height=\"" + fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " +
                fmt(height) + "\">\n";
    }

    void circle(double cx, double cy, double r, const std::string& fill, double fill_opacity,
                const std::string& stroke = "", double stroke_width = 0.0) {
        buf_ += "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) + "\" r=\"" + fmt(r) +
                "\" fill=\"" + fill + "\" fill-opacity=\"" + fmt(fill_opacity) + "\"";
        if (!stroke.empty())
            buf_ += " stroke=\"" + stroke + "\" stroke-width=\"" + fmt(stroke_width) + "\"";
        buf_ += "/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill,
              double fill_opacity) {
        buf_ += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(w) +
                "\" height=\"" + fmt(h) + "\" fill=\"" + fill + "\" fill-opacity=\"" +
                fmt(fill_opacity) + "\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width) {
        buf_ += "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) +
                "\" y2=\"" + fmt(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
                fmt(width) + "\"/>\n";
    }

    /// Left or right half-disc, split along the vertical diameter.
    void half_circle(double cx, double cy, double r, bool left, const std::string& fill,
                     double fill_opacity) {
        const int sweep = left ? 0 : 1;
        buf_ += "<path d=\"M " + fmt(cx) + " " + fmt(cy - r) + " A " + fmt(r) + " " + fmt(r) +
                " 0 0 " + std::to_string(sweep) + " " + fmt(cx) + " " + fmt(cy + r) +
                " Z\" fill=\"" + fill + "\" fill-opacity=\"" + fmt(fill_opacity) + "\"/>\n";
    }

    /// Left or right half of a square of half-side `r`.
    void half_square(double cx, double cy, double r, bool left, const std::string& fill,
                     double fill_opacity) {
        const double x = left ? cx - r : cx;
        rect(x, cy - r, r, 2.0 * r, fill, fill_opacity);
    }

    std::string finish() {
        buf_ += "</svg>\n";
        return std::move(buf_);
    }

private:
    std::string buf_;
};

/// Darken a #rrggbb color by `factor` in [0, 1].
std::string shade_color(const std::string& hex, double factor) {
    if (hex.size() != 7 || hex[0] != '#') return hex;
    char out[8] = "#000000";
    for (int c = 0; c < 3; ++c) {
        const int v = std::stoi(hex.substr(1 + 2 * static_cast<std::size_t>(c), 2), nullptr, 16);
        const int scaled = std::clamp(static_cast<int>(std::lround(v * factor)), 0, 255);
        std::snprintf(out + 1 + 2 * c, 3, "%02x", scaled);
    }
    return std::string(out, 7);
}

std::string class_color(const RenderOptions& options, int index) {
    const auto& palette = options.palette.empty() ? default_palette() : options.palette;
    return palette[static_cast<std::size_t>(index) % palette.size()];
}

std::string significance_shade(double p) {
    if (p < 0.001) return "#1b1b1b";
    if (p < 0.01) return "#5a5a5a";
    return "#9e9e9e";
}

// Square glyphs match circle glyphs in area for the same value, so area
// ordering tracks value ordering across shapes.
constexpr double kSquareHalfSide = 0.88622692545275794;  // sqrt(pi)/2

}  // namespace

Scene build_scene(const Embedding& embedding, const RenderOptions& options,
                  const InferenceReport* report) {
    if (!embedding.centers.allFinite() || !embedding.radii.allFinite())
        throw std::invalid_argument("build_scene: non-finite embedding values");
    const int t = static_cast<int>(embedding.radii.size());

    Scene scene;
    scene.dim = embedding.dim;
    scene.labels = embedding.labels;
    scene.centers = embedding.centers;
    scene.radii = embedding.radii;
    scene.canvas_px = options.canvas_px;
    scene.margin_px = options.margin_px;
    scene.objective = embedding.objective;
    scene.unit_scale = embedding_scale(embedding.target);
    for (int i = 0; i < t; ++i) scene.colors.push_back(class_color(options, i));

    // Fit the circles' bounding box (first two axes) into the canvas.
    double extent = 0.0;
    const auto inner = options.canvas_px - 2.0 * options.margin_px;
    if (inner <= 0.0) throw std::invalid_argument("build_scene: margin exceeds canvas");
    for (int axis = 0; axis < std::min(2, embedding.dim); ++axis) {
        double lo = 0.0, hi = 0.0;
        for (int i = 0; i < t; ++i) {
            lo = std::min(lo, embedding.centers(i, axis) - embedding.radii(i));
            hi = std::max(hi, embedding.centers(i, axis) + embedding.radii(i));
        }
        extent = std::max(extent, hi - lo);
    }
    scene.scale = extent > 0.0 ? inner / extent : 1.0;

    for (int i = 0; i < t; ++i) {
        for (int j = i + 1; j < t; ++j) {
            const double target_m = embedding.target.margins(i, j);
            const double seen_m = embedding.achieved.margins(i, j);
            if (!(seen_m * target_m < 0.0)) continue;
            if (report != nullptr) {
                const auto& cell =
                    report->first_order[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                if (!cell || !cell->significant) continue;
            }
            scene.markers.push_back({i, j, seen_m, target_m});
        }
    }
    return scene;
}

std::string render_scene_svg(const Scene& scene) {
    const int t = static_cast<int>(scene.radii.size());

    // Pixel transform: center the bounding box of the drawn circles.
    double lo_x = 0.0, hi_x = 0.0, lo_y = 0.0, hi_y = 0.0;
    bool first = true;
    for (int i = 0; i < t; ++i) {
        const double x = scene.centers(i, 0);
        const double y = scene.dim >= 2 ? scene.centers(i, 1) : 0.0;
        const double r = scene.radii(i);
        if (first) {
            lo_x = x - r;
            hi_x = x + r;
            lo_y = y - r;
            hi_y = y + r;
            first = false;
        } else {
            lo_x = std::min(lo_x, x - r);
            hi_x = std::max(hi_x, x + r);
            lo_y = std::min(lo_y, y - r);
            hi_y = std::max(hi_y, y + r);
        }
    }
    const double mid_x = 0.5 * (lo_x + hi_x);
    const double mid_y = 0.5 * (lo_y + hi_y);
    const double cpx = 0.5 * scene.canvas_px;
    const auto px = [&](double x, double y) {
        // SVG y axis points down.
        return std::pair<double, double>{cpx + (x - mid_x) * scene.scale,
                                         cpx - (y - mid_y) * scene.scale};
    };

    SvgBuilder svg(scene.canvas_px, scene.canvas_px);

    // Depth order for 3D scenes: draw far (small third coordinate) first.
    std::vector<int> order(static_cast<std::size_t>(t));
    std::iota(order.begin(), order.end(), 0);
    double z_lo = 0.0, z_hi = 0.0;
    if (scene.dim >= 3) {
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return scene.centers(a, 2) < scene.centers(b, 2); });
        z_lo = scene.centers.col(2).minCoeff();
        z_hi = scene.centers.col(2).maxCoeff();
    }

    for (int idx : order) {
        const auto [cx, cy] = px(scene.centers(idx, 0), scene.dim >= 2 ? scene.centers(idx, 1) : 0.0);
        std::string fill = scene.colors[static_cast<std::size_t>(idx)];
        if (scene.dim >= 3 && z_hi > z_lo) {
            const double depth = (scene.centers(idx, 2) - z_lo) / (z_hi - z_lo);
            fill = shade_color(fill, 0.65 + 0.35 * depth);
        }
        svg.circle(cx, cy, scene.radii(idx) * scene.scale, fill, 0.45, fill, 1.5);
    }

    // Sign-flip markers: a segment along the center-connection line whose
    // length is the margin/overlap error, centered between the facing rims.
    for (const auto& m : scene.markers) {
        Vector ci = scene.centers.row(m.i).transpose();
        Vector cj = scene.centers.row(m.j).transpose();
        Vector dir = cj - ci;
        const double d = dir.norm();
        if (d > 0.0)
            dir /= d;
        else {
            dir.setZero();
            dir(0) = 1.0;
        }
        const Vector rim_i = ci + dir * scene.radii(m.i);
        const Vector rim_j = cj - dir * scene.radii(m.j);
        const Vector mid = 0.5 * (rim_i + rim_j);
        const double half_len = 0.5 * std::abs(m.visualized_margin - m.target_margin);
        const Vector a = mid - dir * half_len;
        const Vector b = mid + dir * half_len;
        const auto [x1, y1] = px(a(0), scene.dim >= 2 ? a(1) : 0.0);
        const auto [x2, y2] = px(b(0), scene.dim >= 2 ? b(1) : 0.0);
        svg.line(x1, y1, x2, y2, "#000000", 3.0);
    }

    // Overall-error bar, invisible for a (numerically) perfect embedding.
    const double cutoff = 1e-9 * scene.unit_scale * scene.unit_scale;
    if (scene.objective >= cutoff && scene.objective > 0.0) {
        const double len = std::min(std::sqrt(scene.objective) * scene.scale,
                                    scene.canvas_px - 2.0 * scene.margin_px);
        const double y = scene.canvas_px - 0.5 * scene.margin_px;
        svg.line(scene.margin_px, y, scene.margin_px + len, y, "#000000", 4.0);
    }

    return svg.finish();
}

std::string scene_to_json(const Scene& scene) {
    nlohmann::json j;
    j["dim"] = scene.dim;
    j["labels"] = scene.labels;
    j["colors"] = scene.colors;
    j["canvas_px"] = scene.canvas_px;
    j["margin_px"] = scene.margin_px;
    j["scale"] = scene.scale;
    j["objective"] = scene.objective;
    j["unit_scale"] = scene.unit_scale;
    std::vector<std::vector<double>> centers;
    for (Eigen::Index i = 0; i < scene.centers.rows(); ++i) {
        std::vector<double> row;
        for (Eigen::Index k = 0; k < scene.centers.cols(); ++k) row.push_back(scene.centers(i, k));
        centers.push_back(std::move(row));
    }
    j["centers"] = centers;
    j["radii"] = std::vector<double>(scene.radii.data(), scene.radii.data() + scene.radii.size());
    j["sign_flips"] = nlohmann::json::array();
    for (const auto& m : scene.markers)
        j["sign_flips"].push_back({{"i", m.i},
                                   {"j", m.j},
                                   {"visualized_margin", m.visualized_margin},
                                   {"target_margin", m.target_margin}});
    return j.dump(2);
}

Scene scene_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    Scene scene;
    scene.dim = j.at("dim").get<int>();
    scene.labels = j.at("labels").get<std::vector<std::string>>();
    scene.colors = j.at("colors").get<std::vector<std::string>>();
    scene.canvas_px = j.at("canvas_px").get<double>();
    scene.margin_px = j.at("margin_px").get<double>();
    scene.scale = j.at("scale").get<double>();
    scene.objective = j.at("objective").get<double>();
    scene.unit_scale = j.at("unit_scale").get<double>();
    const auto centers = j.at("centers").get<std::vector<std::vector<double>>>();
    const auto radii = j.at("radii").get<std::vector<double>>();
    scene.centers.resize(static_cast<Eigen::Index>(centers.size()), scene.dim);
    for (std::size_t i = 0; i < centers.size(); ++i)
        for (int k = 0; k < scene.dim; ++k)
            scene.centers(static_cast<Eigen::Index>(i), k) = centers[i][static_cast<std::size_t>(k)];
    scene.radii = Eigen::Map<const Vector>(radii.data(), static_cast<Eigen::Index>(radii.size()));
    for (const auto& m : j.at("sign_flips")) {
        scene.markers.push_back({m.at("i").get<int>(), m.at("j").get<int>(),
                                 m.at("visualized_margin").get<double>(),
                                 m.at("target_margin").get<double>()});
    }
    return scene;
}

// ---------------------------------------------------------------------------
// Inference diagrams
// ---------------------------------------------------------------------------

namespace {

void value_half_glyph(SvgBuilder& svg, double cx, double cy, double value, double px_per_unit,
                      bool left, const std::string& fill, double opacity) {
    const double size = std::abs(value) * px_per_unit;
    if (size <= 0.0) return;  // zero-valued: no glyph
    if (value > 0.0)
        svg.half_circle(cx, cy, size, left, fill, opacity);
    else
        svg.half_square(cx, cy, size * kSquareHalfSide, left, fill, opacity);
}

void grid_lines(SvgBuilder& svg, double origin, double cell, int count) {
    const double span = cell * count;
    for (int k = 0; k <= count; ++k) {
        svg.line(origin + k * cell, origin, origin + k * cell, origin + span, "#dddddd", 1.0);
        svg.line(origin, origin + k * cell, origin + span, origin + k * cell, "#dddddd", 1.0);
    }
}

}  // namespace

std::string render_values_diagram(const SummaryStats& highdim, const SummaryStats& embedded,
                                  const RenderOptions& options) {
    const int t = highdim.size();
    if (embedded.size() != t)
        throw std::invalid_argument("render_values_diagram: class count mismatch");

    const double cell = (options.canvas_px - 2.0 * options.margin_px) / t;
    SvgBuilder svg(options.canvas_px, options.canvas_px);
    grid_lines(svg, options.margin_px, cell, t);

    // One shared value scale across every glyph in the diagram.
    double vmax = 0.0;
    for (const auto* s : {&highdim, &embedded}) {
        vmax = std::max(vmax, s->radii.cwiseAbs().maxCoeff());
        for (int i = 0; i < t; ++i)
            for (int j = i + 1; j < t; ++j) {
                vmax = std::max(vmax, std::abs(s->distances(i, j)));
                vmax = std::max(vmax, std::abs(s->overlap(i, j)));
            }
    }
    const double px_per_unit = vmax > 0.0 ? 0.45 * cell / vmax : 0.0;

    const auto cell_center = [&](int row, int col) {
        return std::pair<double, double>{options.margin_px + (col + 0.5) * cell,
                                         options.margin_px + (row + 0.5) * cell};
    };

    for (int i = 0; i < t; ++i) {
        const auto [cx, cy] = cell_center(i, i);
        const std::string color = class_color(options, i);
        value_half_glyph(svg, cx, cy, highdim.radii(i), px_per_unit, true, color, 1.0);
        value_half_glyph(svg, cx, cy, embedded.radii(i), px_per_unit, false, color, 0.55);
    }
    for (int i = 0; i < t; ++i) {
        for (int j = i + 1; j < t; ++j) {
            {  // separations: lower triangle, row j, column i
                const auto [cx, cy] = cell_center(j, i);
                value_half_glyph(svg, cx, cy, highdim.distances(i, j), px_per_unit, true,
                                 "#333333", 1.0);
                value_half_glyph(svg, cx, cy, embedded.distances(i, j), px_per_unit, false,
                                 "#888888", 1.0);
            }
            {  // overlaps: upper triangle, row i, column j
                const auto [cx, cy] = cell_center(i, j);
                value_half_glyph(svg, cx, cy, highdim.overlap(i, j), px_per_unit, true, "#333333",
                                 1.0);
                value_half_glyph(svg, cx, cy, embedded.overlap(i, j), px_per_unit, false,
                                 "#888888", 1.0);
            }
        }
    }
    return svg.finish();
}

std::string render_significance_diagram(const InferenceReport& report, DiagramKind kind,
                                        const RenderOptions& options) {
    if (kind == DiagramKind::Values)
        throw std::invalid_argument("render_significance_diagram: use render_values_diagram");

    const bool pairwise = kind == DiagramKind::Pairwise;
    const int t = static_cast<int>(report.labels.size());
    const int size = pairwise ? static_cast<int>(report.pairs.size()) : t;
    const double cell = (options.canvas_px - 2.0 * options.margin_px) / size;
    SvgBuilder svg(options.canvas_px, options.canvas_px);
    grid_lines(svg, options.margin_px, cell, size);

    const auto cell_center = [&](int row, int col) {
        return std::pair<double, double>{options.margin_px + (col + 0.5) * cell,
                                         options.margin_px + (row + 0.5) * cell};
    };

    const auto draw_cell = [&](int row, int col, const std::optional<TestResult>& res) {
        if (!res || !res->significant) return;  // absence marks non-significance
        const auto [cx, cy] = cell_center(row, col);
        const std::string fill = significance_shade(res->p_value);
        const double r = 0.35 * cell;
        if (res->estimate >= 0.0)
            svg.circle(cx, cy, r, fill, 1.0);
        else
            svg.rect(cx - r * kSquareHalfSide, cy - r * kSquareHalfSide, 2.0 * r * kSquareHalfSide,
                     2.0 * r * kSquareHalfSide, fill, 1.0);
    };

    if (!pairwise) {
        for (int i = 0; i < t; ++i) {  // class identity dots on the diagonal
            const auto [cx, cy] = cell_center(i, i);
            svg.circle(cx, cy, 0.3 * cell, class_color(options, i), 1.0);
        }
        for (int row = 0; row < t; ++row)
            for (int col = 0; col < t; ++col)
                if (row != col)
                    draw_cell(row, col,
                              report.first_order[static_cast<std::size_t>(row)]
                                                [static_cast<std::size_t>(col)]);
    } else {
        // Pair identity ticks: two colored dots per row/column.
        for (int u = 0; u < size; ++u) {
            const auto [i, j] = report.pairs[static_cast<std::size_t>(u)];
            const double y = options.margin_px + (u + 0.5) * cell;
            svg.circle(options.margin_px - 14.0, y, 5.0, class_color(options, i), 1.0);
            svg.circle(options.margin_px - 14.0, y + 11.0, 5.0, class_color(options, j), 1.0);
            const double x = options.margin_px + (u + 0.5) * cell;
            svg.circle(x, options.margin_px - 14.0, 5.0, class_color(options, i), 1.0);
            svg.circle(x + 11.0, options.margin_px - 14.0, 5.0, class_color(options, j), 1.0);
        }
        for (int row = 0; row < size; ++row)
            for (int col = 0; col < size; ++col)
                draw_cell(row, col,
                          report.second_order[static_cast<std::size_t>(row)]
                                             [static_cast<std::size_t>(col)]);
    }
    return svg.finish();
}

}  // namespace h2s
