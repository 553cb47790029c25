#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "constmoran/assoc_stats.hpp"
#include "constmoran/error.hpp"
#include "constmoran/moran.hpp"
#include "constmoran/spatial_weights.hpp"

namespace constmoran {

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// split on commas, semicolons, tabs and runs of spaces
inline std::vector<std::string> split_tokens(const std::string& line) {
    std::vector<std::string> out;
    std::string current;
    for (char c : line) {
        if (c == ',' || c == ';' || c == '\t' || c == ' ') {
            if (!current.empty()) {
                out.push_back(current);
                current.clear();
            }
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) out.push_back(current);
    return out;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    out.push_back(trim(current));
    return out;
}

inline double parse_double(const std::string& token, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(token, &pos);
        if (pos != token.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw parse_error("non-numeric value '" + token + "' " + context);
    }
}

} // namespace detail

// Adjacency read from an edge-list document, with the external identifiers
// retained. Identifiers are mapped to indices by sorted order so runs are
// reproducible regardless of file ordering.
struct LabeledAdjacency {
    AdjacencyList adjacency{0, {}};
    std::vector<std::string> ids; // index -> external identifier
};

// Edge-list format: two identifier columns per line, `#` comments ignored.
inline LabeledAdjacency load_adjacency(std::istream& in, const std::string& source = "<stream>") {
    std::vector<std::pair<std::string, std::string>> raw_edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = detail::trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const auto tokens = detail::split_tokens(stripped);
        if (tokens.size() != 2)
            throw parse_error(source + ":" + std::to_string(lineno) +
                              ": expected two site identifiers, got " +
                              std::to_string(tokens.size()));
        if (tokens[0] == tokens[1])
            throw parse_error(source + ":" + std::to_string(lineno) + ": self-loop edge '" +
                              tokens[0] + "'");
        raw_edges.emplace_back(tokens[0], tokens[1]);
    }
    if (raw_edges.empty()) throw parse_error(source + ": no edges found");

    std::vector<std::string> ids;
    for (const auto& [a, b] : raw_edges) {
        ids.push_back(a);
        ids.push_back(b);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    std::map<std::string, site_index> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = static_cast<site_index>(i);

    std::vector<Edge> edges;
    edges.reserve(raw_edges.size());
    for (const auto& [a, b] : raw_edges) edges.emplace_back(index[a], index[b]);

    LabeledAdjacency out{AdjacencyList(ids.size(), std::move(edges)), std::move(ids)};
    return out;
}

inline LabeledAdjacency load_adjacency_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open adjacency file '" + path + "'");
    return load_adjacency(in, path);
}

// Values table plus adjacency, joined by site identifier.
struct Dataset {
    std::vector<std::string> site_ids;
    std::vector<std::string> variable_names;
    std::vector<Field> variables; // aligned with variable_names
    AdjacencyList adjacency{0, {}};

    const Field& variable(const std::string& name) const {
        for (std::size_t i = 0; i < variable_names.size(); ++i)
            if (variable_names[i] == name) return variables[i];
        throw error("no variable named '" + name + "' in the dataset");
    }

    std::size_t n_sites() const noexcept { return site_ids.size(); }
};

namespace detail {

struct ValuesTable {
    std::vector<std::string> ids;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows; // rows[i][c]
};

// CSV with header; first column is the site identifier, the rest are numeric.
inline ValuesTable load_values_csv(std::istream& in, const std::string& source) {
    ValuesTable t;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const auto cells = split_csv(stripped);
        if (!have_header) {
            if (cells.size() < 2)
                throw parse_error(source + ": header needs a site_id column and at least one variable");
            t.columns.assign(cells.begin() + 1, cells.end());
            have_header = true;
            continue;
        }
        if (cells.size() != t.columns.size() + 1)
            throw parse_error(source + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(t.columns.size() + 1) + " cells, got " +
                              std::to_string(cells.size()));
        if (cells[0].empty())
            throw parse_error(source + ":" + std::to_string(lineno) + ": empty site identifier");
        t.ids.push_back(cells[0]);
        std::vector<double> row;
        row.reserve(t.columns.size());
        for (std::size_t c = 1; c < cells.size(); ++c)
            row.push_back(parse_double(cells[c], "at " + source + ":" + std::to_string(lineno)));
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw parse_error(source + ": empty file");
    if (t.ids.empty()) throw parse_error(source + ": no data rows");

    std::vector<std::string> sorted = t.ids;
    std::sort(sorted.begin(), sorted.end());
    const auto dup = std::adjacent_find(sorted.begin(), sorted.end());
    if (dup != sorted.end()) throw parse_error(source + ": duplicate site id '" + *dup + "'");
    return t;
}

inline Dataset assemble(ValuesTable table, std::vector<std::string> site_order,
                        AdjacencyList adjacency, const std::string& source) {
    std::map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < table.ids.size(); ++i) row_of[table.ids[i]] = i;

    Dataset ds;
    ds.adjacency = std::move(adjacency);
    ds.variable_names = table.columns;
    ds.variables.reserve(table.columns.size());
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        std::vector<double> values(site_order.size());
        for (std::size_t i = 0; i < site_order.size(); ++i) {
            const auto it = row_of.find(site_order[i]);
            if (it == row_of.end())
                throw error(source + ": site '" + site_order[i] +
                            "' appears in the adjacency but not in the values file");
            values[i] = table.rows[it->second][c];
        }
        ds.variables.emplace_back(std::move(values), table.columns[c]);
    }
    ds.site_ids = std::move(site_order);
    return ds;
}

} // namespace detail

// Join a values CSV with an explicit adjacency. Sites are ordered by the
// adjacency's sorted identifier mapping; every adjacency site must have a
// values row and vice versa.
inline Dataset load_dataset(const std::string& values_path, const std::string& adjacency_path) {
    std::ifstream vin(values_path);
    if (!vin) throw error("cannot open values file '" + values_path + "'");
    auto table = detail::load_values_csv(vin, values_path);
    auto labeled = load_adjacency_file(adjacency_path);

    for (const auto& id : table.ids) {
        if (!std::binary_search(labeled.ids.begin(), labeled.ids.end(), id))
            throw error(values_path + ": site '" + id + "' has values but no adjacency entry");
    }
    return detail::assemble(std::move(table), std::move(labeled.ids), std::move(labeled.adjacency),
                            values_path);
}

// Grid mode: identifiers are the row-major cell indices "0".."N-1"; the
// adjacency is queen contiguity on the grid.
inline Dataset load_dataset_grid(const std::string& values_path, std::size_t rows,
                                 std::size_t cols) {
    std::ifstream vin(values_path);
    if (!vin) throw error("cannot open values file '" + values_path + "'");
    auto table = detail::load_values_csv(vin, values_path);
    const std::size_t n = rows * cols;
    if (table.ids.size() != n)
        throw error(values_path + ": grid " + std::to_string(rows) + "x" + std::to_string(cols) +
                    " needs " + std::to_string(n) + " rows, found " +
                    std::to_string(table.ids.size()));
    std::vector<std::string> order(n);
    std::vector<bool> seen(n, false);
    for (const auto& id : table.ids) {
        std::size_t idx = 0;
        try {
            std::size_t pos = 0;
            idx = std::stoul(id, &pos);
            if (pos != id.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw error(values_path + ": grid mode needs integer site ids, got '" + id + "'");
        }
        if (idx >= n) throw error(values_path + ": site id " + id + " outside the grid");
        if (seen[idx]) throw error(values_path + ": duplicate site id '" + id + "'");
        seen[idx] = true;
        order[idx] = id;
    }
    return detail::assemble(std::move(table), std::move(order), build_grid_queen(rows, cols),
                            values_path);
}

// Replace every variable with its average ranks (the --rank preprocessing).
inline Field rank_transform(const Field& f) {
    return Field(average_ranks(f.values), f.name);
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Field CSV: header `site_id,value`, row-major integer ids. Deterministic
// bytes for a given field.
inline std::string field_to_csv(const Field& field) {
    std::string out = "site_id,value\n";
    for (std::size_t i = 0; i < field.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += format_double(field.values[i]);
        out += '\n';
    }
    return out;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot open output file '" + path + "'");
    out << content;
    if (!out) throw error("failed writing '" + path + "'");
}

} // namespace constmoran
