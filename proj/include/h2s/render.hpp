#pragma once

#include <string>
#include <vector>

#include "h2s/embedding.hpp"
#include "h2s/inference.hpp"
#include "h2s/types.hpp"

namespace h2s {

struct RenderOptions {
    double canvas_px = 800.0;
    double margin_px = 40.0;
    /// Qualitative palette assigned in label order (cycled past its end).
    /// Empty selects the built-in 10-color palette.
    std::vector<std::string> palette;
};

const std::vector<std::string>& default_palette();

/// A pair whose visualized margin/overlap sign contradicts the target sign.
struct SignFlipMarker {
    int i = 0;
    int j = 0;
    double visualized_margin = 0.0;
    double target_margin = 0.0;
};

/// Machine-readable description of a rendered scene. scale converts length
/// units to pixels; centers/radii are in embedding units.
struct Scene {
    int dim = 2;
    std::vector<std::string> labels;
    Matrix centers;
    Vector radii;
    std::vector<std::string> colors;
    double canvas_px = 800.0;
    double margin_px = 40.0;
    double scale = 1.0;
    std::vector<SignFlipMarker> markers;
    double objective = 0.0;
    double unit_scale = 1.0;  // target configuration scale, for the error bar cutoff
};

/// When an inference report is supplied, only pairs whose high-dimensional
/// overlap is significant produce sign-flip markers; without one, every
/// strict sign disagreement does.
Scene build_scene(const Embedding& embedding, const RenderOptions& options,
                  const InferenceReport* report = nullptr);

std::string render_scene_svg(const Scene& scene);

std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);

enum class DiagramKind { Values, Significance, Pairwise };

/// T x T split-glyph diagram of statistic values: radii on the diagonal,
/// separations below, overlaps above; left halves carry the high-dimensional
/// values, right halves the visualized ones. Circles are positive values,
/// squares negative, all sized on one shared scale.
std::string render_values_diagram(const SummaryStats& highdim, const SummaryStats& embedded,
                                  const RenderOptions& options = {});

/// Significance grids: DiagramKind::Significance draws the first-order T x T
/// matrix, DiagramKind::Pairwise the second-order K x K matrix. Glyphs darken
/// with stronger significance (p < .05 / .01 / .001) and vanish entirely for
/// non-significant cells.
std::string render_significance_diagram(const InferenceReport& report, DiagramKind kind,
                                        const RenderOptions& options = {});

}  // namespace h2s
