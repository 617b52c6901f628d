#include "h2s/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace h2s {

DataFormat format_from_name(const std::string& name) {
    if (name == "csv") return DataFormat::LabeledCsv;
    if (name == "json") return DataFormat::Json;
    if (name == "distances") return DataFormat::DistanceCsv;
    throw ValidationError("unknown data format '" + name + "' (expected csv|json|distances)");
}

std::string format_name(DataFormat f) {
    switch (f) {
        case DataFormat::LabeledCsv: return "csv";
        case DataFormat::Json: return "json";
        case DataFormat::DistanceCsv: return "distances";
    }
    return "?";
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        const auto a = field.find_first_not_of(" \t\r");
        const auto b = field.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_number(const std::string& field, int line_no, int column) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end)
        throw ValidationError("line " + std::to_string(line_no) + " column " +
                              std::to_string(column) + ": '" + field + "' is not numeric");
    return value;
}

std::vector<std::string> non_empty_lines(const std::string& text, std::vector<int>* line_numbers) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        lines.push_back(line);
        if (line_numbers) line_numbers->push_back(no);
    }
    return lines;
}

}  // namespace

LabeledDataset parse_labeled_csv(const std::string& text) {
    std::vector<int> line_no;
    const auto lines = non_empty_lines(text, &line_no);
    if (lines.empty()) throw ValidationError("empty dataset file");

    std::vector<std::string> order;
    std::vector<std::vector<std::vector<double>>> rows_by_class;
    int n_cols = -1;

    for (std::size_t k = 0; k < lines.size(); ++k) {
        const auto fields = split_csv_line(lines[k]);
        if (fields.size() < 2)
            throw ValidationError("line " + std::to_string(line_no[k]) +
                                  ": expected a label and at least one coordinate");
        if (n_cols < 0) n_cols = static_cast<int>(fields.size());
        if (static_cast<int>(fields.size()) != n_cols)
            throw ValidationError("line " + std::to_string(line_no[k]) + ": expected " +
                                  std::to_string(n_cols) + " columns, got " +
                                  std::to_string(fields.size()));
        const std::string& label = fields[0];
        std::vector<double> coords;
        coords.reserve(fields.size() - 1);
        for (std::size_t c = 1; c < fields.size(); ++c)
            coords.push_back(parse_number(fields[c], line_no[k], static_cast<int>(c + 1)));

        auto it = std::find(order.begin(), order.end(), label);
        if (it == order.end()) {
            order.push_back(label);
            rows_by_class.emplace_back();
            it = std::prev(order.end());
        }
        rows_by_class[static_cast<std::size_t>(it - order.begin())].push_back(std::move(coords));
    }

    std::vector<LabeledClass> classes;
    for (std::size_t c = 0; c < order.size(); ++c) {
        const auto& rows = rows_by_class[c];
        Matrix pts(static_cast<Eigen::Index>(rows.size()), n_cols - 1);
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (int k = 0; k < n_cols - 1; ++k)
                pts(static_cast<Eigen::Index>(r), k) = rows[r][static_cast<std::size_t>(k)];
        classes.push_back({order[c], std::move(pts)});
    }
    try {
        return LabeledDataset(std::move(classes));
    } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
    }
}

std::string labeled_csv(const LabeledDataset& dataset) {
    std::ostringstream out;
    out.precision(17);
    for (const auto& c : dataset.classes()) {
        for (Eigen::Index i = 0; i < c.points.rows(); ++i) {
            out << c.label;
            for (Eigen::Index k = 0; k < c.points.cols(); ++k) out << ',' << c.points(i, k);
            out << '\n';
        }
    }
    return out.str();
}

DistanceDataset parse_distance_csv(const std::string& matrix_text, const std::string& labels_text,
                                   std::vector<std::string>* warnings) {
    std::vector<int> line_no;
    const auto lines = non_empty_lines(matrix_text, &line_no);
    const auto p = static_cast<Eigen::Index>(lines.size());
    if (p == 0) throw ValidationError("empty distance matrix file");

    Matrix d(p, p);
    for (std::size_t r = 0; r < lines.size(); ++r) {
        const auto fields = split_csv_line(lines[r]);
        if (static_cast<Eigen::Index>(fields.size()) != p)
            throw ValidationError("line " + std::to_string(line_no[r]) + ": expected " +
                                  std::to_string(p) + " columns, got " +
                                  std::to_string(fields.size()));
        for (std::size_t c = 0; c < fields.size(); ++c)
            d(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_number(fields[c], line_no[r], static_cast<int>(c + 1));
    }

    const auto labels = non_empty_lines(labels_text, nullptr);
    if (static_cast<Eigen::Index>(labels.size()) != p)
        throw ValidationError("label file has " + std::to_string(labels.size()) +
                              " entries for a " + std::to_string(p) + "-point matrix");

    const double scale = d.cwiseAbs().maxCoeff();
    const double tol = 1e-9 * (scale > 0.0 ? scale : 1.0);

    const double max_asym = (d - d.transpose()).cwiseAbs().maxCoeff();
    if (max_asym > tol)
        throw ValidationError("distance matrix asymmetry " + std::to_string(max_asym) +
                              " exceeds the 1e-9 relative tolerance");
    if (max_asym > 0.0) {
        d = 0.5 * (d + Matrix(d.transpose()));
        if (warnings)
            warnings->push_back("distance matrix symmetrized (max asymmetry " +
                                std::to_string(max_asym) + ")");
    }

    const double max_diag = d.diagonal().cwiseAbs().maxCoeff();
    if (max_diag > tol)
        throw ValidationError("distance matrix diagonal entry " + std::to_string(max_diag) +
                              " exceeds the 1e-9 relative tolerance");
    if (max_diag > 0.0) {
        d.diagonal().setZero();
        if (warnings) warnings->push_back("distance matrix diagonal zeroed");
    }

    const double min_entry = d.minCoeff();
    if (min_entry < -tol)
        throw ValidationError("distance matrix has negative entries");
    if (min_entry < 0.0) {
        d = d.cwiseMax(0.0);
        if (warnings) warnings->push_back("tiny negative distances clamped to zero");
    }

    try {
        return DistanceDataset(labels, std::move(d));
    } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
    }
}

IngestResult parse_dataset_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("invalid JSON: ") + e.what());
    }
    try {
        return dataset_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad dataset JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
    }
}

IngestResult ingest(const std::string& path, DataFormat format, const std::string& labels_path) {
    IngestResult out;
    switch (format) {
        case DataFormat::LabeledCsv:
            out.points = parse_labeled_csv(read_file(path));
            break;
        case DataFormat::Json:
            out = parse_dataset_json(read_file(path));
            break;
        case DataFormat::DistanceCsv: {
            if (labels_path.empty())
                throw ValidationError("distance-matrix ingestion needs a label file");
            out.distances =
                parse_distance_csv(read_file(path), read_file(labels_path), &out.warnings);
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON conversions
// ---------------------------------------------------------------------------

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index cols_hint = -1) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index c = r > 0 ? static_cast<Eigen::Index>(rows[0].size()) : std::max<Eigen::Index>(cols_hint, 0);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != c)
            throw std::invalid_argument("ragged matrix in JSON");
        for (Eigen::Index k = 0; k < c; ++k)
            m(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    return m;
}

nlohmann::json vector_to_json(const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Vector vector_from_json(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

nlohmann::json stats_to_json(const SummaryStats& stats) {
    return {{"labels", stats.labels},
            {"radii", vector_to_json(stats.radii)},
            {"distances", matrix_to_json(stats.distances)},
            {"margins", matrix_to_json(stats.margins)}};
}

SummaryStats stats_from_json(const nlohmann::json& j) {
    SummaryStats s;
    s.labels = j.at("labels").get<std::vector<std::string>>();
    s.radii = vector_from_json(j.at("radii"));
    s.distances = matrix_from_json(j.at("distances"));
    s.margins = matrix_from_json(j.at("margins"));
    return s;
}

nlohmann::json ensemble_to_json(const HypersphereEnsemble& ensemble) {
    nlohmann::json spheres = nlohmann::json::array();
    for (int i = 0; i < ensemble.size(); ++i) {
        const auto& s = ensemble.spheres[static_cast<std::size_t>(i)];
        spheres.push_back({{"label", ensemble.labels[static_cast<std::size_t>(i)]},
                           {"center", vector_to_json(s.center)},
                           {"radius", s.radius}});
    }
    return {{"spheres", std::move(spheres)}};
}

HypersphereEnsemble ensemble_from_json(const nlohmann::json& j) {
    std::vector<std::string> labels;
    std::vector<Hypersphere> spheres;
    for (const auto& s : j.at("spheres")) {
        labels.push_back(s.at("label").get<std::string>());
        spheres.emplace_back(vector_from_json(s.at("center")), s.at("radius").get<double>());
    }
    return HypersphereEnsemble(std::move(labels), std::move(spheres));
}

nlohmann::json dataset_to_json(const IngestResult& data) {
    if (data.points) {
        nlohmann::json classes = nlohmann::json::array();
        for (const auto& c : data.points->classes())
            classes.push_back({{"label", c.label}, {"points", matrix_to_json(c.points)}});
        return {{"classes", std::move(classes)}};
    }
    if (data.distances) {
        return {{"point_labels", data.distances->point_labels()},
                {"distances", matrix_to_json(data.distances->distances())}};
    }
    throw std::invalid_argument("dataset_to_json: empty ingest result");
}

IngestResult dataset_from_json(const nlohmann::json& j) {
    IngestResult out;
    if (j.contains("classes")) {
        std::vector<LabeledClass> classes;
        for (const auto& c : j.at("classes"))
            classes.push_back(
                {c.at("label").get<std::string>(), matrix_from_json(c.at("points"))});
        out.points = LabeledDataset(std::move(classes));
        return out;
    }
    if (j.contains("distances")) {
        out.distances = DistanceDataset(j.at("point_labels").get<std::vector<std::string>>(),
                                        matrix_from_json(j.at("distances")));
        return out;
    }
    throw std::invalid_argument("dataset JSON needs either 'classes' or 'distances'");
}

nlohmann::json embedding_to_json(const Embedding& e) {
    return {{"dim", e.dim},
            {"labels", e.labels},
            {"centers", matrix_to_json(e.centers)},
            {"radii", vector_to_json(e.radii)},
            {"achieved", stats_to_json(e.achieved)},
            {"target", stats_to_json(e.target)},
            {"errors",
             {{"distance", matrix_to_json(e.errors.distance)},
              {"margin", matrix_to_json(e.errors.margin)},
              {"radius", vector_to_json(e.errors.radius)}}},
            {"objective", e.objective},
            {"weights", {{"alpha", e.weights.alpha}, {"beta", e.weights.beta}}},
            {"converged", e.converged},
            {"iterations", e.iterations}};
}

Embedding embedding_from_json(const nlohmann::json& j) {
    Embedding e;
    e.dim = j.at("dim").get<int>();
    e.labels = j.at("labels").get<std::vector<std::string>>();
    e.centers = matrix_from_json(j.at("centers"), e.dim);
    e.radii = vector_from_json(j.at("radii"));
    e.achieved = stats_from_json(j.at("achieved"));
    e.target = stats_from_json(j.at("target"));
    e.errors.distance = matrix_from_json(j.at("errors").at("distance"));
    e.errors.margin = matrix_from_json(j.at("errors").at("margin"));
    e.errors.radius = vector_from_json(j.at("errors").at("radius"));
    e.objective = j.at("objective").get<double>();
    e.weights.alpha = j.at("weights").at("alpha").get<double>();
    e.weights.beta = j.at("weights").at("beta").get<double>();
    e.converged = j.at("converged").get<bool>();
    e.iterations = j.at("iterations").get<int>();
    return e;
}

namespace {

nlohmann::json test_result_to_json(const TestResult& r) {
    return {{"kind", test_kind_name(r.kind)},
            {"estimate", r.estimate},
            {"ci_low", r.ci_low},
            {"ci_high", r.ci_high},
            {"ci_kind", r.ci_kind},
            {"p_value", r.p_value},
            {"significant_raw", r.significant_raw},
            {"significant", r.significant},
            {"note", r.note}};
}

TestResult test_result_from_json(const nlohmann::json& j) {
    TestResult r;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "separation") r.kind = TestKind::Separation;
    else if (kind == "overlap") r.kind = TestKind::Overlap;
    else if (kind == "radius_diff") r.kind = TestKind::RadiusDiff;
    else if (kind == "separation_diff") r.kind = TestKind::SeparationDiff;
    else if (kind == "overlap_diff") r.kind = TestKind::OverlapDiff;
    else throw std::invalid_argument("unknown test kind '" + kind + "'");
    r.estimate = j.at("estimate").get<double>();
    r.ci_low = j.at("ci_low").get<double>();
    r.ci_high = j.at("ci_high").get<double>();
    r.ci_kind = j.at("ci_kind").get<std::string>();
    r.p_value = j.at("p_value").get<double>();
    r.significant_raw = j.at("significant_raw").get<bool>();
    r.significant = j.at("significant").get<bool>();
    r.note = j.at("note").get<std::string>();
    return r;
}

nlohmann::json cell_grid_to_json(const std::vector<std::vector<std::optional<TestResult>>>& grid) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : grid) {
        nlohmann::json cells = nlohmann::json::array();
        for (const auto& cell : row)
            cells.push_back(cell ? test_result_to_json(*cell) : nlohmann::json(nullptr));
        rows.push_back(std::move(cells));
    }
    return rows;
}

std::vector<std::vector<std::optional<TestResult>>> cell_grid_from_json(const nlohmann::json& j) {
    std::vector<std::vector<std::optional<TestResult>>> grid;
    for (const auto& row : j) {
        std::vector<std::optional<TestResult>> cells;
        for (const auto& cell : row)
            cells.push_back(cell.is_null() ? std::nullopt
                                           : std::optional<TestResult>(test_result_from_json(cell)));
        grid.push_back(std::move(cells));
    }
    return grid;
}

}  // namespace

nlohmann::json inference_report_to_json(const InferenceReport& report) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [i, j] : report.pairs) pairs.push_back({i, j});
    return {{"labels", report.labels},
            {"fdr_alpha", report.fdr_alpha},
            {"pairs", std::move(pairs)},
            {"first_order", cell_grid_to_json(report.first_order)},
            {"second_order", cell_grid_to_json(report.second_order)}};
}

InferenceReport inference_report_from_json(const nlohmann::json& j) {
    InferenceReport report;
    report.labels = j.at("labels").get<std::vector<std::string>>();
    report.fdr_alpha = j.at("fdr_alpha").get<double>();
    for (const auto& p : j.at("pairs"))
        report.pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
    report.first_order = cell_grid_from_json(j.at("first_order"));
    report.second_order = cell_grid_from_json(j.at("second_order"));
    return report;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

}  // namespace h2s
