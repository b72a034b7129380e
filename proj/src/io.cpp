#include "paa/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>
#include <utility>

#include "CLI11.hpp"
#include "json.hpp"

#include "paa/model_selection.hpp"
#include "paa/obs_models.hpp"

namespace paa {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::string f17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

// One line -> cells; quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(trim(cur));
    return cells;
}

std::optional<double> parse_number(const std::string& cell) {
    if (cell.empty()) return std::nullopt;
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return value;
}

void check_cell_domain(double v, Domain domain, const std::string& path,
                       std::size_t row, std::size_t col) {
    const std::string at =
        path + ": row " + std::to_string(row) + ", column " +
        std::to_string(col);
    if (!std::isfinite(v)) throw NonFiniteError(at + ": value is not finite");
    switch (domain) {
        case Domain::real:
            return;
        case Domain::count:
        case Domain::composition:
            if (v < 0.0 || v != std::floor(v))
                throw DomainMismatchError(
                    at + ": expected a nonnegative integer, got " + f17(v));
            return;
        case Domain::binary:
            if (v != 0.0 && v != 1.0)
                throw DomainMismatchError(at + ": expected 0 or 1, got " +
                                          f17(v));
            return;
    }
}

} // namespace

DataMatrix ingest_csv(const std::string& path, Orientation orientation,
                      Domain domain, bool auto_detect) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == EOF) break; // trailing newline
        rows.push_back(split_csv_line(line));
    }
    if (rows.empty()) throw EmptyDocumentError(path + ": no rows");

    std::size_t row_offset = 1; // 1-based file coordinates for messages
    if (auto_detect && !parse_number(rows.front().front())) {
        rows.erase(rows.begin());
        row_offset = 2;
        if (rows.empty()) throw EmptyDocumentError(path + ": no data rows");
    }
    std::size_t col_offset = 1;
    if (auto_detect && !rows.front().empty() &&
        !parse_number(rows.front().front())) {
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].empty())
                throw RaggedRowError(path + ": row " +
                                     std::to_string(r + row_offset) +
                                     " is empty");
            rows[r].erase(rows[r].begin());
        }
        col_offset = 2;
    }
    const std::size_t width = rows.front().size();
    if (width == 0) throw EmptyDocumentError(path + ": no data columns");
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != width)
            throw RaggedRowError(path + ": row " +
                                 std::to_string(r + row_offset) + " has " +
                                 std::to_string(rows[r].size()) +
                                 " cells, expected " + std::to_string(width));
    }

    Matrix file_values(static_cast<Index>(rows.size()),
                       static_cast<Index>(width));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            const auto value = parse_number(rows[r][c]);
            if (!value)
                throw Error(path + ": row " + std::to_string(r + row_offset) +
                            ", column " + std::to_string(c + col_offset) +
                            ": not a number: '" + rows[r][c] + "'");
            check_cell_domain(*value, domain, path, r + row_offset,
                              c + col_offset);
            file_values(static_cast<Index>(r), static_cast<Index>(c)) = *value;
        }
    }
    if (orientation == Orientation::rows_are_observations)
        return DataMatrix(file_values.transpose(), domain);
    return DataMatrix(std::move(file_values), domain);
}

void write_csv_rows_are_observations(const std::string& path,
                                     const Matrix& values) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    for (Index j = 0; j < values.cols(); ++j) {
        for (Index i = 0; i < values.rows(); ++i) {
            if (i > 0) out << ',';
            out << f17(values(i, j));
        }
        out << '\n';
    }
    if (!out.good()) throw Error("failed while writing " + path);
}

std::uint64_t data_fingerprint(const DataMatrix& x) {
    std::uint64_t hash = 14695981039346656037ULL;
    auto mix_bytes = [&hash](const void* data, std::size_t size) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            hash ^= bytes[i];
            hash *= 1099511628211ULL;
        }
    };
    auto mix_u64 = [&mix_bytes](std::uint64_t v) {
        unsigned char le[8];
        for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>(v >> (8 * i));
        mix_bytes(le, 8);
    };
    mix_bytes("PAA1", 4);
    mix_u64(static_cast<std::uint64_t>(x.domain()));
    mix_u64(static_cast<std::uint64_t>(x.rows()));
    mix_u64(static_cast<std::uint64_t>(x.cols()));
    const Matrix& v = x.values();
    for (Index j = 0; j < v.cols(); ++j) {
        for (Index i = 0; i < v.rows(); ++i) {
            std::uint64_t bits = 0;
            const double d = v(i, j);
            std::memcpy(&bits, &d, 8);
            mix_u64(bits);
        }
    }
    return hash;
}

// ---------------------------------------------------------------------------
// JSON documents
// ---------------------------------------------------------------------------

namespace {

json matrix_to_json(const Matrix& m) {
    json data = json::array();
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<Index>();
    const auto cols = j.at("cols").get<Index>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 ||
        data.size() != static_cast<std::size_t>(rows * cols))
        throw Error("matrix data does not match its shape");
    Matrix m(rows, cols);
    std::size_t idx = 0;
    for (Index i = 0; i < rows; ++i)
        for (Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[idx++].get<double>();
    return m;
}

json config_to_json(const FitConfig& config) {
    return json{{"k", config.k},
                {"max_iter", config.max_iter},
                {"tol", config.tol},
                {"lambda_auto", config.lambda_auto},
                {"lambda", config.lambda},
                {"restarts", config.restarts},
                {"seed", config.seed},
                {"init", "dirichlet-uniform"},
                {"delta", config.delta},
                {"prob_floor", config.prob_floor}};
}

FitConfig config_from_json(const json& j) {
    FitConfig config;
    config.k = j.at("k").get<int>();
    config.max_iter = j.at("max_iter").get<int>();
    config.tol = j.at("tol").get<double>();
    config.lambda_auto = j.at("lambda_auto").get<bool>();
    config.lambda = j.at("lambda").get<double>();
    config.restarts = j.at("restarts").get<int>();
    config.seed = j.at("seed").get<std::uint64_t>();
    if (j.at("init").get<std::string>() != "dirichlet-uniform")
        throw Error("unknown init scheme: " + j.at("init").get<std::string>());
    config.init = InitScheme::dirichlet_uniform;
    config.delta = j.at("delta").get<double>();
    config.prob_floor = j.at("prob_floor").get<double>();
    return config;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(path + ": invalid JSON: " + e.what());
    }
}

void write_json_file(const std::string& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << doc.dump(2) << '\n';
    if (!out.good()) throw Error("failed while writing " + path);
}

void check_schema(const json& doc, const std::string& path) {
    if (!doc.contains("schema_version") ||
        doc.at("schema_version").get<int>() != 1)
        throw Error(path + ": unsupported schema_version (expected 1)");
}

} // namespace

void save_model_document(const std::string& path, const ModelDocument& doc) {
    json j{{"schema_version", doc.schema_version},
           {"kind", kind_name(doc.model.kind)},
           {"k", doc.model.z.cols()},
           {"m", doc.model.z.rows()},
           {"n", doc.model.h.cols()},
           {"w", matrix_to_json(doc.model.w.matrix())},
           {"h", matrix_to_json(doc.model.h.matrix())},
           {"z", matrix_to_json(doc.model.z)},
           {"nll_trace", doc.model.nll_trace},
           {"config", config_to_json(doc.model.config)},
           {"seed_used", doc.model.seed_used},
           {"iterations", doc.iterations},
           {"converged", doc.converged},
           {"final_nll", doc.final_nll},
           {"stochasticity_residual", doc.stochasticity_residual},
           {"data_fingerprint", doc.data_fingerprint}};
    write_json_file(path, j);
}

ModelDocument load_model_document(const std::string& path) {
    const json j = read_json_file(path);
    try {
        check_schema(j, path);
        ArchetypalModel model{
            kind_from_name(j.at("kind").get<std::string>()),
            StochasticMatrix(matrix_from_json(j.at("w"))),
            StochasticMatrix(matrix_from_json(j.at("h"))),
            matrix_from_json(j.at("z")),
            j.at("nll_trace").get<std::vector<double>>(),
            config_from_json(j.at("config")),
            j.at("seed_used").get<std::uint64_t>()};
        return ModelDocument{j.at("schema_version").get<int>(),
                             std::move(model),
                             j.at("iterations").get<int>(),
                             j.at("converged").get<bool>(),
                             j.at("final_nll").get<double>(),
                             j.at("stochasticity_residual").get<double>(),
                             j.at("data_fingerprint").get<std::uint64_t>()};
    } catch (const nlohmann::json::exception& e) {
        throw Error(path + ": malformed model document: " + e.what());
    }
}

void save_truth_document(const std::string& path, const TruthDocument& doc) {
    json config = json::object();
    if (!doc.config_json.empty()) {
        try {
            config = json::parse(doc.config_json);
        } catch (const nlohmann::json::exception& e) {
            throw Error("truth config is not valid JSON: " + std::string(e.what()));
        }
    }
    json j{{"schema_version", doc.schema_version},
           {"kind", doc.kind},
           {"true_archetypes", matrix_to_json(doc.true_archetypes)},
           {"true_h", matrix_to_json(doc.true_h)},
           {"config", std::move(config)}};
    write_json_file(path, j);
}

TruthDocument load_truth_document(const std::string& path) {
    const json j = read_json_file(path);
    try {
        check_schema(j, path);
        TruthDocument doc;
        doc.schema_version = j.at("schema_version").get<int>();
        doc.kind = j.at("kind").get<std::string>();
        doc.true_archetypes = matrix_from_json(j.at("true_archetypes"));
        doc.true_h = matrix_from_json(j.at("true_h"));
        doc.config_json = j.at("config").dump();
        return doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(path + ": malformed truth document: " + e.what());
    }
}

void save_layout_document(const std::string& path, const SimplexLayout& layout) {
    json points = json::array();
    for (const auto& p : layout.points) points.push_back({p[0], p[1]});
    json whiskers = json::array();
    for (const auto& per_point : layout.whiskers) {
        json list = json::array();
        for (const Whisker& w : per_point)
            list.push_back(json{{"archetype", w.archetype},
                                {"end", {w.end[0], w.end[1]}}});
        whiskers.push_back(std::move(list));
    }
    json j{{"schema_version", 1},
           {"k", layout.vertex_order.size()},
           {"vertex_order", layout.vertex_order},
           {"vertex_angles", layout.vertex_angles},
           {"points", std::move(points)},
           {"whiskers", std::move(whiskers)},
           {"deviance_norm",
            layout.deviance_norm ? json(*layout.deviance_norm) : json(nullptr)},
           {"degenerate_equal_angles", layout.degenerate_equal_angles}};
    write_json_file(path, j);
}

void save_match_document(const std::string& path, const MatchResult& result,
                         const std::string& metric) {
    json assignment = json::array();
    for (const auto& a : result.assignment)
        assignment.push_back(a ? json(*a) : json(nullptr));
    json j{{"schema_version", 1},
           {"metric", metric},
           {"matched_count", result.matched_count},
           {"assignment", std::move(assignment)},
           {"distances", matrix_to_json(result.distances)}};
    write_json_file(path, j);
}

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

namespace {

struct CommonIngest {
    std::string input;
    std::string orientation = "rows";
    bool no_auto_detect = false;
};

Orientation parse_orientation(const std::string& s) {
    return s == "cols" ? Orientation::columns_are_observations
                       : Orientation::rows_are_observations;
}

int resolve_jobs(std::optional<int> flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("PAA_JOBS")) {
        const std::string s(env);
        int v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || v < 1)
            throw UsageError("PAA_JOBS must be a positive integer, got '" + s +
                             "'");
        return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void apply_lambda(FitConfig& config, const std::string& lambda_str) {
    if (lambda_str == "auto") {
        config.lambda_auto = true;
        config.lambda = 0.0;
        return;
    }
    const auto value = parse_number(lambda_str);
    if (!value || !(*value > 0.0))
        throw UsageError("--lambda expects 'auto' or a positive real, got '" +
                         lambda_str + "'");
    config.lambda_auto = false;
    config.lambda = *value;
}

std::string machine_line(
    const std::vector<std::pair<std::string, std::string>>& fields) {
    std::string line = "result";
    for (const auto& [key, value] : fields) line += " " + key + "=" + value;
    return line;
}

std::string hex16(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(v));
    return buf;
}

// --- fit ---------------------------------------------------------------

struct FitArgs {
    std::string model;
    int k = 1;
    CommonIngest ingest;
    std::string output;
    int restarts = 10;
    int max_iter = 1000;
    double tol = 1e-8;
    std::uint64_t seed = 0;
    std::string lambda = "auto";
    std::optional<int> jobs;
};

int cmd_fit(const FitArgs& a) {
    const ModelKind kind = kind_from_name(a.model);
    const DataMatrix x =
        ingest_csv(a.ingest.input, parse_orientation(a.ingest.orientation),
                   required_domain(kind), !a.ingest.no_auto_detect);
    FitConfig config;
    config.k = a.k;
    config.max_iter = a.max_iter;
    config.tol = a.tol;
    config.restarts = a.restarts;
    config.seed = a.seed;
    apply_lambda(config, a.lambda);
    const int jobs = resolve_jobs(a.jobs);
    FitReport report = run_restarts(x, kind, config, jobs);
    ModelDocument doc{1,
                      std::move(report.model),
                      report.iterations,
                      report.converged,
                      report.final_nll,
                      report.stochasticity_residual,
                      data_fingerprint(x)};
    save_model_document(a.output, doc);
    std::cout << machine_line(
                     {{"command", "fit"},
                      {"model", a.model},
                      {"k", std::to_string(a.k)},
                      {"m", std::to_string(x.rows())},
                      {"n", std::to_string(x.cols())},
                      {"restarts", std::to_string(a.restarts)},
                      {"seed", std::to_string(a.seed)},
                      {"seed_used", std::to_string(doc.model.seed_used)},
                      {"iterations", std::to_string(doc.iterations)},
                      {"converged", doc.converged ? "1" : "0"},
                      {"nll", f17(doc.final_nll)},
                      {"residual", f17(doc.stochasticity_residual)},
                      {"fingerprint", hex16(doc.data_fingerprint)},
                      {"output", a.output}})
              << '\n';
    std::cout << "fit: " << a.model << " model, k=" << a.k << ", "
              << x.cols() << " observations x " << x.rows() << " features\n"
              << "best restart: stream " << doc.model.seed_used << " of "
              << a.restarts << ", nll " << f17(doc.final_nll) << ", "
              << (doc.converged ? "converged" : "iteration cap") << " after "
              << doc.iterations << " iterations\n"
              << "wrote " << a.output << "\n";
    return 0;
}

// --- elbow -------------------------------------------------------------

struct ElbowArgs {
    std::string model;
    int k_min = 1;
    int k_max = 1;
    CommonIngest ingest;
    std::string output;
    int restarts = 10;
    int max_iter = 1000;
    double tol = 1e-8;
    std::uint64_t seed = 0;
    std::string lambda = "auto";
    std::optional<int> jobs;
};

int cmd_elbow(const ElbowArgs& a) {
    if (a.k_min < 1 || a.k_min > a.k_max)
        throw UsageError("need 1 <= --k-min <= --k-max, got " +
                         std::to_string(a.k_min) + ".." +
                         std::to_string(a.k_max));
    const ModelKind kind = kind_from_name(a.model);
    const DataMatrix x =
        ingest_csv(a.ingest.input, parse_orientation(a.ingest.orientation),
                   required_domain(kind), !a.ingest.no_auto_detect);
    FitConfig config;
    config.max_iter = a.max_iter;
    config.tol = a.tol;
    config.restarts = a.restarts;
    config.seed = a.seed;
    apply_lambda(config, a.lambda);
    const int jobs = resolve_jobs(a.jobs);
    const ElbowCurve curve = elbow_curve(x, kind, a.k_min, a.k_max, config, jobs);

    std::ofstream out(a.output);
    if (!out) throw Error("cannot write " + a.output);
    out << "k,best_nll,seed_of_best,restarts\n";
    for (const ElbowPoint& p : curve.entries)
        out << p.k << ',' << f17(p.best_nll) << ',' << p.seed_of_best << ','
            << p.restarts << '\n';
    if (!out.good()) throw Error("failed while writing " + a.output);

    const int suggested =
        curve.entries[static_cast<std::size_t>(curve.suggested_index)].k;
    std::cout << machine_line({{"command", "elbow"},
                               {"model", a.model},
                               {"k_min", std::to_string(a.k_min)},
                               {"k_max", std::to_string(a.k_max)},
                               {"restarts", std::to_string(a.restarts)},
                               {"seed", std::to_string(a.seed)},
                               {"suggested_k", std::to_string(suggested)},
                               {"output", a.output}})
              << '\n';
    std::cout << "elbow: " << a.model << " model, k=" << a.k_min << ".."
              << a.k_max << ", best of " << a.restarts
              << " restarts per k (plus a warm start above k-min)\n";
    for (const ElbowPoint& p : curve.entries)
        std::cout << "  k=" << p.k << "  nll=" << f17(p.best_nll) << "\n";
    std::cout << "suggested k: " << suggested
              << " (knee heuristic; inspect the curve)\n"
              << "wrote " << a.output << "\n";
    return 0;
}

// --- simulate ----------------------------------------------------------

struct SimulateArgs {
    std::string kind;
    std::uint64_t seed = 0;
    std::optional<int> k, d, n;
    std::optional<double> p_s, alpha;
    std::optional<int> rate_max, count_min, count_max;
    std::string output;
    std::string truth;
};

int cmd_simulate(const SimulateArgs& a) {
    if (a.p_s && a.kind != "binary")
        throw UsageError("--p-s only applies to --kind binary");
    if (a.rate_max && a.kind != "poisson")
        throw UsageError("--rate-max only applies to --kind poisson");
    if ((a.count_min || a.count_max) && a.kind != "multinomial")
        throw UsageError("--count-min/--count-max only apply to --kind multinomial");

    json config;
    SyntheticDataset ds = [&]() -> SyntheticDataset {
        try {
            if (a.kind == "binary") {
                const int k = a.k.value_or(6), d = a.d.value_or(10),
                          n = a.n.value_or(100);
                const double p_s = a.p_s.value_or(0.3),
                             alpha = a.alpha.value_or(0.4);
                config = json{{"seed", a.seed}, {"k", k},     {"d", d},
                              {"n", n},         {"p_s", p_s}, {"alpha", alpha}};
                return gen_binary(a.seed, k, d, n, p_s, alpha);
            }
            if (a.kind == "poisson") {
                const int k = a.k.value_or(6), d = a.d.value_or(12),
                          n = a.n.value_or(500),
                          rate_max = a.rate_max.value_or(10);
                const double alpha = a.alpha.value_or(0.4);
                config = json{{"seed", a.seed},         {"k", k},
                              {"d", d},                 {"n", n},
                              {"rate_max", rate_max},   {"alpha", alpha}};
                return gen_poisson(a.seed, k, d, n, rate_max, alpha);
            }
            const int k = a.k.value_or(5), d = a.d.value_or(3),
                      n = a.n.value_or(500),
                      count_min = a.count_min.value_or(1000),
                      count_max = a.count_max.value_or(2000);
            const double alpha = a.alpha.value_or(0.5);
            config = json{{"seed", a.seed},           {"k", k},
                          {"d", d},                   {"n", n},
                          {"count_min", count_min},   {"count_max", count_max},
                          {"alpha", alpha}};
            return gen_multinomial(a.seed, k, d, n, count_min, count_max, alpha);
        } catch (const DimensionTooSmallError& e) {
            throw UsageError(e.what());
        } catch (const UnsupportedDimensionError& e) {
            throw UsageError(e.what());
        }
    }();

    write_csv_rows_are_observations(a.output, ds.x.values());
    TruthDocument doc;
    doc.kind = a.kind;
    doc.true_archetypes = ds.true_archetypes;
    doc.true_h = ds.true_h.matrix();
    doc.config_json = config.dump();
    save_truth_document(a.truth, doc);

    std::cout << machine_line(
                     {{"command", "simulate"},
                      {"kind", a.kind},
                      {"seed", std::to_string(a.seed)},
                      {"k", std::to_string(ds.true_archetypes.cols())},
                      {"d", std::to_string(ds.x.rows())},
                      {"n", std::to_string(ds.x.cols())},
                      {"output", a.output},
                      {"truth", a.truth}})
              << '\n';
    std::cout << "simulate: " << a.kind << " dataset, k="
              << ds.true_archetypes.cols() << ", d=" << ds.x.rows() << ", n="
              << ds.x.cols() << ", seed=" << a.seed << "\n"
              << "wrote " << a.output << "\n"
              << "wrote " << a.truth << "\n";
    return 0;
}

// --- viz ---------------------------------------------------------------

struct VizArgs {
    std::string model;
    std::string out = "viz.svg";
    bool deviance = false;
    CommonIngest ingest;
    bool whiskers = false;
    double whisker_scale = 0.3;
    std::string order = "tsp";
    bool no_labels = false;
};

VertexOrdering given_order_vertices(const Matrix& z) {
    const Index k = z.cols();
    VertexOrdering out;
    out.order.resize(static_cast<std::size_t>(k));
    std::iota(out.order.begin(), out.order.end(), Index{0});
    out.angles.assign(static_cast<std::size_t>(k), 0.0);
    std::vector<double> arc(static_cast<std::size_t>(k));
    double total = 0.0;
    for (Index i = 0; i < k; ++i) {
        arc[static_cast<std::size_t>(i)] =
            (z.col(i) - z.col((i + 1) % k)).norm();
        total += arc[static_cast<std::size_t>(i)];
    }
    if (total == 0.0) {
        for (Index i = 0; i < k; ++i)
            out.angles[static_cast<std::size_t>(i)] =
                2.0 * M_PI * static_cast<double>(i) / static_cast<double>(k);
        out.degenerate = true;
        return out;
    }
    double angle = 0.0;
    for (Index i = 0; i < k; ++i) {
        out.angles[static_cast<std::size_t>(i)] = angle;
        angle += 2.0 * M_PI * arc[static_cast<std::size_t>(i)] / total;
    }
    return out;
}

std::string layout_path_for(const std::string& svg_path) {
    std::string base = svg_path;
    const std::string ext = ".svg";
    if (base.size() > ext.size() &&
        base.compare(base.size() - ext.size(), ext.size(), ext) == 0)
        base.resize(base.size() - ext.size());
    return base + ".layout.json";
}

int cmd_viz(const VizArgs& a) {
    if (a.deviance && a.ingest.input.empty())
        throw UsageError("--deviance requires --input with the original data");
    if (!(a.whisker_scale > 0.0))
        throw UsageError("--whisker-scale must be positive");
    const ModelDocument doc = load_model_document(a.model);
    const Matrix& z = doc.model.z;
    const Index k = z.cols();

    VertexOrdering ordering = [&] {
        if (k == 1) {
            VertexOrdering one;
            one.order = {0};
            one.angles = {0.0};
            return one;
        }
        return a.order == "given" ? given_order_vertices(z) : order_vertices(z);
    }();
    if (ordering.degenerate)
        std::cerr << "warning: all archetypes coincide; placing vertices at "
                     "equal angles\n";

    SimplexLayout layout;
    layout.vertex_order = ordering.order;
    layout.vertex_angles = ordering.angles;
    layout.points = project_points(doc.model.h, ordering.angles);
    layout.whiskers = compute_whiskers(doc.model.h, layout.points,
                                       ordering.angles, a.whisker_scale);
    layout.degenerate_equal_angles = ordering.degenerate;

    if (a.deviance) {
        const DataMatrix x =
            ingest_csv(a.ingest.input, parse_orientation(a.ingest.orientation),
                       required_domain(doc.model.kind),
                       !a.ingest.no_auto_detect);
        if (x.rows() != z.rows() || x.cols() != doc.model.h.cols())
            throw ShapeMismatchError(
                "data of shape " + std::to_string(x.rows()) + "x" +
                std::to_string(x.cols()) + " does not match the model");
        if (data_fingerprint(x) != doc.data_fingerprint)
            std::cerr << "warning: data fingerprint differs from the one the "
                         "model was fit on\n";
        std::vector<double> dev(static_cast<std::size_t>(x.cols()));
        for (Index j = 0; j < x.cols(); ++j)
            dev[static_cast<std::size_t>(j)] = deviance(
                x.values().col(j), z * doc.model.h.matrix().col(j),
                doc.model.kind);
        layout.deviance_norm = normalize_deviance(dev);
    }

    RenderOptions options;
    options.show_deviance = a.deviance;
    options.show_whiskers = a.whiskers;
    options.labels = !a.no_labels;
    const std::string svg = render_svg(layout, options);
    {
        std::ofstream out(a.out);
        if (!out) throw Error("cannot write " + a.out);
        out << svg;
        if (!out.good()) throw Error("failed while writing " + a.out);
    }
    const std::string layout_path = layout_path_for(a.out);
    save_layout_document(layout_path, layout);

    std::cout << machine_line(
                     {{"command", "viz"},
                      {"model", a.model},
                      {"k", std::to_string(k)},
                      {"points", std::to_string(layout.points.size())},
                      {"order", a.order},
                      {"degenerate", layout.degenerate_equal_angles ? "1" : "0"},
                      {"svg", a.out},
                      {"layout", layout_path}})
              << '\n';
    std::cout << "viz: " << layout.points.size() << " observations on " << k
              << " archetypes (" << a.order << " order)\n"
              << "wrote " << a.out << "\n"
              << "wrote " << layout_path << "\n";
    return 0;
}

// --- match -------------------------------------------------------------

struct MatchArgs {
    std::string model;
    std::string truth;
    std::string metric;
    std::string output = "match.json";
};

int cmd_match(const MatchArgs& a) {
    const ModelDocument doc = load_model_document(a.model);
    const TruthDocument truth = load_truth_document(a.truth);
    const MatchMetric metric =
        a.metric == "jaccard" ? MatchMetric::jaccard : MatchMetric::l1;
    MatchResult result;
    try {
        result = match_archetypes(doc.model.z, truth.true_archetypes, metric);
    } catch (const DomainMismatchError& e) {
        throw UsageError(e.what());
    }
    save_match_document(a.output, result, a.metric);

    std::cout << machine_line(
                     {{"command", "match"},
                      {"metric", a.metric},
                      {"recovered", std::to_string(doc.model.z.cols())},
                      {"truth", std::to_string(truth.true_archetypes.cols())},
                      {"matched", std::to_string(result.matched_count)},
                      {"output", a.output}})
              << '\n';
    std::cout << "match: " << a.metric << " metric, " << result.matched_count
              << " of " << doc.model.z.cols()
              << " recovered archetypes matched (truth has "
              << truth.true_archetypes.cols() << ")\n";
    if (result.matched_count > 0) {
        double total = 0.0;
        for (std::size_t r = 0; r < result.assignment.size(); ++r)
            if (result.assignment[r])
                total += result.distances(static_cast<Index>(r),
                                          *result.assignment[r]);
        std::cout << "mean matched distance: "
                  << f17(total / result.matched_count) << "\n";
    }
    std::cout << "wrote " << a.output << "\n";
    return 0;
}

void add_ingest_flags(CLI::App* cmd, CommonIngest& ingest, bool required) {
    auto* opt = cmd->add_option("--input", ingest.input,
                                "Input CSV (default: rows are observations)");
    if (required) opt->required();
    cmd->add_option("--orientation", ingest.orientation,
                    "Which way observations run in the CSV")
        ->check(CLI::IsMember({"rows", "cols"}));
    cmd->add_flag("--no-auto-detect", ingest.no_auto_detect,
                  "Disable header/id-column detection");
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Archetypal analysis for real, count, binary, and "
                 "compositional data"};
    app.require_subcommand(1);
    const std::vector<std::string> kinds{"normal", "poisson", "multinomial",
                                         "bernoulli"};

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "Fit an archetypal model to a CSV");
    fit->add_option("--model", fit_args.model, "Observation model")
        ->required()
        ->check(CLI::IsMember(kinds));
    fit->add_option("--k", fit_args.k, "Number of archetypes")
        ->required()
        ->check(CLI::PositiveNumber);
    add_ingest_flags(fit, fit_args.ingest, true);
    fit->add_option("--output", fit_args.output, "Model JSON path")->required();
    fit->add_option("--restarts", fit_args.restarts, "Random restarts")
        ->check(CLI::PositiveNumber);
    fit->add_option("--max-iter", fit_args.max_iter, "Iteration cap")
        ->check(CLI::PositiveNumber);
    fit->add_option("--tol", fit_args.tol, "Relative objective tolerance")
        ->check(CLI::PositiveNumber);
    fit->add_option("--seed", fit_args.seed, "Master seed");
    fit->add_option("--lambda", fit_args.lambda,
                    "Stochasticity penalty: 'auto' or a positive real");
    fit->add_option("--jobs", fit_args.jobs,
                    "Worker threads (default: PAA_JOBS or hardware)")
        ->check(CLI::PositiveNumber);

    ElbowArgs elbow_args;
    auto* elbow = app.add_subcommand(
        "elbow", "Best-of-restarts objective for a range of k");
    elbow->add_option("--model", elbow_args.model, "Observation model")
        ->required()
        ->check(CLI::IsMember(kinds));
    elbow->add_option("--k-min", elbow_args.k_min, "Smallest k")->required();
    elbow->add_option("--k-max", elbow_args.k_max, "Largest k")->required();
    add_ingest_flags(elbow, elbow_args.ingest, true);
    elbow->add_option("--output", elbow_args.output, "Curve CSV path")
        ->required();
    elbow->add_option("--restarts", elbow_args.restarts, "Random restarts per k")
        ->check(CLI::PositiveNumber);
    elbow->add_option("--max-iter", elbow_args.max_iter, "Iteration cap")
        ->check(CLI::PositiveNumber);
    elbow->add_option("--tol", elbow_args.tol, "Relative objective tolerance")
        ->check(CLI::PositiveNumber);
    elbow->add_option("--seed", elbow_args.seed, "Master seed");
    elbow->add_option("--lambda", elbow_args.lambda,
                      "Stochasticity penalty: 'auto' or a positive real");
    elbow->add_option("--jobs", elbow_args.jobs,
                      "Worker threads (default: PAA_JOBS or hardware)")
        ->check(CLI::PositiveNumber);

    SimulateArgs sim_args;
    auto* sim = app.add_subcommand("simulate",
                                   "Generate a dataset with known archetypes");
    sim->add_option("--kind", sim_args.kind, "Generator")
        ->required()
        ->check(CLI::IsMember({"binary", "poisson", "multinomial"}));
    sim->add_option("--seed", sim_args.seed, "Generator seed");
    sim->add_option("--k", sim_args.k, "Number of archetypes");
    sim->add_option("--d", sim_args.d, "Number of features");
    sim->add_option("--n", sim_args.n, "Number of observations");
    sim->add_option("--p-s", sim_args.p_s, "Bernoulli rate of archetype entries");
    sim->add_option("--rate-max", sim_args.rate_max,
                    "Largest archetype Poisson rate");
    sim->add_option("--count-min", sim_args.count_min, "Smallest trial count");
    sim->add_option("--count-max", sim_args.count_max, "Largest trial count");
    sim->add_option("--alpha", sim_args.alpha, "Dirichlet concentration");
    sim->add_option("--output", sim_args.output, "Data CSV path")->required();
    sim->add_option("--truth", sim_args.truth, "Truth JSON path")->required();

    VizArgs viz_args;
    auto* viz = app.add_subcommand("viz", "Render a fitted model as SVG");
    viz->add_option("--model", viz_args.model, "Model JSON path")->required();
    viz->add_option("--out", viz_args.out, "SVG output path");
    viz->add_flag("--deviance", viz_args.deviance,
                  "Color points by per-observation deviance");
    add_ingest_flags(viz, viz_args.ingest, false);
    viz->add_flag("--whiskers", viz_args.whiskers,
                  "Draw loading whiskers toward vertices");
    viz->add_option("--whisker-scale", viz_args.whisker_scale,
                    "Whisker length per unit loading");
    viz->add_option("--order", viz_args.order, "Vertex ordering")
        ->check(CLI::IsMember({"tsp", "given"}));
    viz->add_flag("--no-labels", viz_args.no_labels, "Skip vertex labels");

    MatchArgs match_args;
    auto* match = app.add_subcommand(
        "match", "Match recovered archetypes against a truth document");
    match->add_option("--model", match_args.model, "Model JSON path")
        ->required();
    match->add_option("--truth", match_args.truth, "Truth JSON path")
        ->required();
    match->add_option("--metric", match_args.metric, "Distance metric")
        ->required()
        ->check(CLI::IsMember({"l1", "jaccard"}));
    match->add_option("--output", match_args.output, "Match JSON path");

    std::vector<std::string> full;
    full.reserve(args.size() + 1);
    full.emplace_back("paa");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(full.size());
    for (const auto& s : full) argv.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (fit->parsed()) return cmd_fit(fit_args);
        if (elbow->parsed()) return cmd_elbow(elbow_args);
        if (sim->parsed()) return cmd_simulate(sim_args);
        if (viz->parsed()) return cmd_viz(viz_args);
        if (match->parsed()) return cmd_match(match_args);
        std::cerr << "usage error: no subcommand given\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace paa
