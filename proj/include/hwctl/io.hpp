#pragma once

#include <string>
#include <vector>

#include "hwctl/cost.hpp"
#include "hwctl/hjb.hpp"
#include "hwctl/model.hpp"

namespace hwctl {

// Fixed-width exact decimal for doubles ("%.17g"): reruns must be
// byte-identical and parsing must recover the same bits.
std::string fmt_double(double v);

// Minimal CSV emitter: one header row, then data rows; '\n' endings.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& cells);
    void close();

  private:
    std::string path_;
    std::string buf_;
    size_t ncols_;
    bool open_ = true;
};

void write_text_file(const std::string& path, const std::string& body);
std::string read_text_file(const std::string& path);

// A solved field together with the inputs it answers for.
struct SolutionBundle {
    ModelParams model;
    CostSpec cost;
    HjbSolution sol;
};

// Portable two-file format: <stem>.json carries grid/model/cost/gain/meta,
// <stem>.csv carries per-node data (node id, coordinates, V, Bellman
// residual, policy entries row-major). The gradient field is not persisted;
// load_solution re-derives it from V with the drift signs of the stored
// policy (upwind differences, mirror ghosts at the faces).
void save_solution(const SolutionBundle& b, const std::string& dir, const std::string& stem);
SolutionBundle load_solution(const std::string& json_path);

}  // namespace hwctl
