#include "fairpost/core.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fairpost {

std::string to_string(Scenario s) {
    return s == Scenario::Aware ? "aware" : "blind";
}

std::string to_string(Notion n) {
    switch (n) {
        case Notion::DemographicParity: return "dp";
        case Notion::EqualOpportunity: return "eoo";
        case Notion::OverallAccuracyEquality: return "oae";
        case Notion::PredictiveEquality: return "pe";
        case Notion::EqualizedOdds: return "eo";
    }
    return "?";
}

Scenario scenario_from_string(const std::string& s) {
    if (s == "aware") return Scenario::Aware;
    if (s == "blind") return Scenario::Blind;
    throw ValidationError("unknown scenario '" + s + "' (aware|blind)");
}

Notion notion_from_string(const std::string& s) {
    if (s == "dp") return Notion::DemographicParity;
    if (s == "eoo") return Notion::EqualOpportunity;
    if (s == "oae") return Notion::OverallAccuracyEquality;
    if (s == "pe") return Notion::PredictiveEquality;
    if (s == "eo") return Notion::EqualizedOdds;
    throw ValidationError("unknown notion '" + s + "' (dp|eoo|oae|pe|eo)");
}

Dataset::Dataset(int d, int k_groups) : d_(d), k_groups_(k_groups) {
    if (d < 1) throw ValidationError("dataset dimension must be >= 1");
    if (k_groups < 2) throw ValidationError("dataset needs >= 2 groups");
    group_count_.assign(static_cast<std::size_t>(k_groups), 0);
    cell_count_.assign(2 * static_cast<std::size_t>(k_groups), 0);
}

void Dataset::reserve(std::size_t n) {
    features_.reserve(n * static_cast<std::size_t>(d_));
    group_.reserve(n);
    label_.reserve(n);
}

void Dataset::add(std::span<const double> x, int a, int y) {
    if (static_cast<int>(x.size()) != d_)
        throw DataError("sample has " + std::to_string(x.size()) +
                        " features, expected " + std::to_string(d_));
    if (a < 1 || a > k_groups_)
        throw DataError("group label " + std::to_string(a) +
                        " outside 1.." + std::to_string(k_groups_));
    if (y != 0 && y != 1)
        throw DataError("class label " + std::to_string(y) + " not in {0,1}");
    for (double v : x) {
        if (!std::isfinite(v)) throw DataError("non-finite feature value");
    }
    features_.insert(features_.end(), x.begin(), x.end());
    group_.push_back(a);
    label_.push_back(y);
    group_count_[static_cast<std::size_t>(a - 1)]++;
    cell_count_[static_cast<std::size_t>(y * k_groups_ + a - 1)]++;
}

std::size_t Dataset::group_count(int a) const {
    if (a < 1 || a > k_groups_) throw ValidationError("group index out of range");
    return group_count_[static_cast<std::size_t>(a - 1)];
}

std::size_t Dataset::cell_count(int y, int a) const {
    if (a < 1 || a > k_groups_ || (y != 0 && y != 1))
        throw ValidationError("cell index out of range");
    return cell_count_[static_cast<std::size_t>(y * k_groups_ + a - 1)];
}

std::size_t Dataset::label_count(int y) const {
    std::size_t total = 0;
    for (int a = 1; a <= k_groups_; ++a) total += cell_count(y, a);
    return total;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
    Dataset out(d_, k_groups_);
    out.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= n()) throw ValidationError("subset index out of range");
        out.add(x(i), a(i), y(i));
    }
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos
                             ? std::string()
                             : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        throw DataError("line " + std::to_string(line_no) +
                        ": not a number: '" + s + "'");
    return v;
}

int parse_int(const std::string& s, std::size_t line_no) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DataError("line " + std::to_string(line_no) +
                        ": not an integer: '" + s + "'");
    return v;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[header.size() - 2] != "a" ||
        header.back() != "y")
        throw DataError(path + ": expected header x1,...,xd,a,y");
    const int d = static_cast<int>(header.size()) - 2;
    for (int j = 0; j < d; ++j) {
        if (header[static_cast<std::size_t>(j)] != "x" + std::to_string(j + 1))
            throw DataError(path + ": expected feature column x" +
                            std::to_string(j + 1));
    }

    struct Row {
        std::vector<double> x;
        int a;
        int y;
    };
    std::vector<Row> rows;
    int k_groups = 2;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError(path + ": line " + std::to_string(line_no) +
                            " has " + std::to_string(fields.size()) +
                            " fields, expected " +
                            std::to_string(header.size()));
        Row r;
        r.x.reserve(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j)
            r.x.push_back(parse_double(fields[static_cast<std::size_t>(j)], line_no));
        r.a = parse_int(fields[static_cast<std::size_t>(d)], line_no);
        r.y = parse_int(fields[static_cast<std::size_t>(d) + 1], line_no);
        if (r.a < 1)
            throw DataError(path + ": line " + std::to_string(line_no) +
                            ": group label must be >= 1");
        k_groups = std::max(k_groups, r.a);
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw DataError(path + ": no data rows");

    Dataset data(d, k_groups);
    data.reserve(rows.size());
    for (const Row& r : rows) data.add(r.x, r.a, r.y);
    return data;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (int j = 1; j <= data.d(); ++j) out << "x" << j << ",";
    out << "a,y\n";
    out.precision(17);
    for (std::size_t i = 0; i < data.n(); ++i) {
        const auto xi = data.x(i);
        for (double v : xi) out << v << ",";
        out << data.a(i) << "," << data.y(i) << "\n";
    }
    if (!out) throw DataError("failed while writing " + path);
}

void FairnessSpec::validate() const {
    if (!(alpha > 0.0)) throw ValidationError("alpha must be > 0");
    if (!(delta_post > 0.0 && delta_post < 1.0))
        throw ValidationError("delta_post must be in (0,1)");
    if (epsilon.mode == EpsilonMode::Fixed && epsilon.fixed_value < 0.0)
        throw ValidationError("fixed epsilon_alpha must be >= 0");
    if (!std::isfinite(alpha)) throw ValidationError("alpha must be finite");
}

int FittedFairClassifier::predict(std::span<const double> x, int a) const {
    const double margin = 2.0 * eta(x, a) - 1.0;
    double threshold;
    if (multi_component()) {
        const std::vector<double> comp = phi_vec(x, a);
        if (comp.size() != lambda.size())
            throw ValidationError("phi component count does not match lambda");
        double acc = 0.0;
        for (std::size_t k = 0; k < comp.size(); ++k)
            acc += lambda[k] * comp[k];
        threshold = acc;
    } else {
        threshold = lambda.at(0) * phi(x, a);
    }
    return margin > threshold ? 1 : 0;
}

std::vector<std::uint8_t> FittedFairClassifier::predict(
    const Dataset& data) const {
    std::vector<std::uint8_t> out(data.n());
    for (std::size_t i = 0; i < data.n(); ++i)
        out[i] = static_cast<std::uint8_t>(predict(data.x(i), data.a(i)));
    return out;
}

}  // namespace fairpost
