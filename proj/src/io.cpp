#include "hwctl/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "hwctl/errors.hpp"

namespace hwctl {

using nlohmann::json;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), ncols_(header.size()) {
    for (size_t i = 0; i < header.size(); ++i) {
        if (i) buf_ += ',';
        buf_ += header[i];
    }
    buf_ += '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != ncols_)
        throw DiagnosticError("csv: row width mismatch in " + path_);
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) buf_ += ',';
        buf_ += cells[i];
    }
    buf_ += '\n';
}

void CsvWriter::close() {
    if (!open_) return;
    open_ = false;
    write_text_file(path_, buf_);
}

void write_text_file(const std::string& path, const std::string& body) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DiagnosticError("io: cannot open " + path + " for writing");
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw DiagnosticError("io: short write to " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("io: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void save_solution(const SolutionBundle& b, const std::string& dir, const std::string& stem) {
    const Grid& g = b.sol.grid;
    const int d = g.d;
    json head;
    head["schema_version"] = 1;
    head["kind"] = b.sol.alpha > 0.0 ? "discounted" : "ergodic";
    head["grid"] = {{"d", d}, {"L", g.L}, {"h", g.h}};
    head["model"] = {{"d", b.model.d},
                     {"lambda", b.model.lambda},
                     {"mu", b.model.mu},
                     {"gamma", b.model.gamma},
                     {"ell", b.model.ell}};
    json mask = json::array();
    for (const auto& row : b.model.mask) {
        json r = json::array();
        for (bool v : row) r.push_back(v);
        mask.push_back(r);
    }
    head["model"]["mask"] = mask;
    head["cost"] = {{"h", b.cost.h}, {"m", b.cost.m}};
    head["epsilon"] = b.sol.epsilon;
    head["alpha"] = b.sol.alpha;
    head["rho"] = b.sol.rho;
    head["residual"] = b.sol.residual;
    head["iterations"] = b.sol.iterations;
    head["rho_history"] = b.sol.rho_history;
    head["csv"] = stem + ".csv";

    std::vector<std::string> cols{"node"};
    for (int i = 0; i < d; ++i) cols.push_back("x" + std::to_string(i));
    cols.push_back("V");
    cols.push_back("residual");
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) cols.push_back("u" + std::to_string(i) + std::to_string(j));

    std::filesystem::path base(dir);
    CsvWriter csv((base / (stem + ".csv")).string(), cols);
    std::vector<std::string> cells;
    for (long long k = 0; k < g.total; ++k) {
        cells.clear();
        cells.push_back(std::to_string(k));
        Vec x = g.coords(k);
        for (int i = 0; i < d; ++i) cells.push_back(fmt_double(x[i]));
        cells.push_back(fmt_double(b.sol.V[k]));
        cells.push_back(fmt_double(b.sol.bell.empty() ? 0.0 : b.sol.bell[k]));
        const double* u = b.sol.policy.data() + static_cast<size_t>(k) * d * d;
        for (int e = 0; e < d * d; ++e) cells.push_back(fmt_double(u[e]));
        csv.row(cells);
    }
    csv.close();
    write_text_file((base / (stem + ".json")).string(), head.dump(2) + "\n");
}

namespace {
void split_csv_line(const std::string& line, std::vector<std::string>& out) {
    out.clear();
    size_t start = 0;
    while (true) {
        size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}
}  // namespace

SolutionBundle load_solution(const std::string& json_path) {
    json head;
    try {
        head = json::parse(read_text_file(json_path));
    } catch (const json::exception& e) {
        throw DiagnosticError("io: bad solution header " + json_path + ": " + e.what());
    }
    if (head.value("schema_version", 0) != 1)
        throw DiagnosticError("io: unsupported solution schema in " + json_path);

    SolutionBundle b;
    const json& jm = head.at("model");
    b.model.d = jm.at("d").get<int>();
    b.model.lambda = jm.at("lambda").get<Vec>();
    b.model.mu = jm.at("mu").get<std::vector<Vec>>();
    b.model.gamma = jm.at("gamma").get<Vec>();
    b.model.ell = jm.at("ell").get<Vec>();
    b.model.mask.clear();
    for (const auto& row : jm.at("mask")) b.model.mask.push_back(row.get<std::vector<bool>>());
    b.cost.h = head.at("cost").at("h").get<Vec>();
    b.cost.m = head.at("cost").at("m").get<Vec>();

    const json& jg = head.at("grid");
    Grid g = Grid::make(jg.at("d").get<int>(), jg.at("L").get<double>(), jg.at("h").get<double>());
    b.sol.grid = g;
    b.sol.epsilon = head.at("epsilon").get<double>();
    b.sol.alpha = head.at("alpha").get<double>();
    b.sol.rho = head.at("rho").get<double>();
    b.sol.residual = head.at("residual").get<double>();
    b.sol.iterations = head.at("iterations").get<int>();
    b.sol.rho_history = head.at("rho_history").get<std::vector<double>>();

    std::filesystem::path csv_path =
        std::filesystem::path(json_path).parent_path() / head.at("csv").get<std::string>();
    std::string body = read_text_file(csv_path.string());

    const int d = g.d;
    b.sol.V.assign(g.total, 0.0);
    b.sol.bell.assign(g.total, 0.0);
    b.sol.policy.assign(static_cast<size_t>(g.total) * d * d, 0.0);
    std::istringstream lines(body);
    std::string line;
    std::vector<std::string> cells;
    if (!std::getline(lines, line)) throw DiagnosticError("io: empty solution csv");
    long long rows = 0;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        split_csv_line(line, cells);
        if (static_cast<int>(cells.size()) != 1 + d + 2 + d * d)
            throw DiagnosticError("io: solution csv row width mismatch");
        const long long k = std::strtoll(cells[0].c_str(), nullptr, 10);
        if (k < 0 || k >= g.total) throw DiagnosticError("io: node id out of range");
        b.sol.V[k] = std::strtod(cells[1 + d].c_str(), nullptr);
        b.sol.bell[k] = std::strtod(cells[2 + d].c_str(), nullptr);
        for (int e = 0; e < d * d; ++e)
            b.sol.policy[static_cast<size_t>(k) * d * d + e] =
                std::strtod(cells[3 + d + e].c_str(), nullptr);
        ++rows;
    }
    if (rows != g.total) throw DiagnosticError("io: solution csv row count mismatch");

    // re-derive the gradient field: upwind differences keyed to the stored
    // policy's drift signs (matches the solver's converged sweep)
    b.sol.grad.assign(static_cast<size_t>(g.total) * d, 0.0);
    std::vector<int> idx(d);
    std::vector<long long> strides(d);
    for (int i = 0; i < d; ++i) strides[i] = g.stride(i);
    for (long long k = 0; k < g.total; ++k) {
        g.unpack(k, idx);
        Vec x = g.coords(k);
        ControlMatrix u = b.sol.policy_at(k);
        Vec bd = limiting_drift(b.model, x, u);
        for (int i = 0; i < d; ++i) {
            const long long ku = idx[i] == g.npts - 1 ? k - strides[i] : k + strides[i];
            const long long kd = idx[i] == 0 ? k + strides[i] : k - strides[i];
            const double DF = (b.sol.V[ku] - b.sol.V[k]) / g.h;
            const double DB = (b.sol.V[k] - b.sol.V[kd]) / g.h;
            b.sol.grad[static_cast<size_t>(k) * d + i] = bd[i] >= 0.0 ? DF : DB;
        }
    }
    return b;
}

}  // namespace hwctl
