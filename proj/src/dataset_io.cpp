/*
 *  Copyright 2026 The chagnn Authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include <nlohmann/json.hpp>

#include "chagnn/dataset.hpp"
#include "chagnn/errors.hpp"

namespace chagnn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path.filename().string(), 0, "cannot open file");
    return in;
}

template <typename T>
T parse_number(std::string_view text, const std::string& file, std::size_t line) {
    const std::string t = trim(text);
    T value{};
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw FormatError(file, line, "cannot parse number '" + t + "'");
    return value;
}

json read_json(const fs::path& path) {
    auto in = open_input(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(path.filename().string(), 0, e.what());
    }
}

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << body;
    if (!out) throw InputError("failed writing " + path.string());
}

void append_real(std::string& out, double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

std::vector<bool> ids_to_mask(const json& ids, std::size_t n, const char* key) {
    if (!ids.is_array()) throw FormatError("splits.json", 0, std::string("'") + key + "' must be an array");
    std::vector<bool> mask(n, false);
    for (const auto& id : ids) {
        if (!id.is_number_integer() || id.get<long long>() < 0 || static_cast<std::size_t>(id.get<long long>()) >= n)
            throw FormatError("splits.json", 0, std::string("invalid node id in '") + key + "'");
        mask[id.get<std::size_t>()] = true;
    }
    return mask;
}

}  // namespace

Dataset load_dataset(const fs::path& dir) {
    for (const char* name : {"edges.tsv", "features.csv", "labels.csv", "meta.json", "splits.json"}) {
        if (!fs::exists(dir / name)) throw FormatError(name, 0, "missing from " + dir.string());
    }

    const json meta = read_json(dir / "meta.json");
    std::size_t n = 0, d = 0;
    int c = 0;
    try {
        n = meta.at("num_nodes").get<std::size_t>();
        d = meta.at("num_features").get<std::size_t>();
        c = meta.at("num_classes").get<int>();
    } catch (const json::exception& e) {
        throw FormatError("meta.json", 0, e.what());
    }
    if (c < 1) throw FormatError("meta.json", 0, "num_classes must be positive");

    Dataset ds;
    ds.num_classes = c;

    {
        auto in = open_input(dir / "edges.tsv");
        std::vector<EdgePair> edges;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            const auto tab = line.find('\t');
            if (tab == std::string::npos) throw FormatError("edges.tsv", lineno, "expected 'u<TAB>v'");
            const auto u = parse_number<std::uint64_t>(std::string_view(line).substr(0, tab), "edges.tsv", lineno);
            const auto v = parse_number<std::uint64_t>(std::string_view(line).substr(tab + 1), "edges.tsv", lineno);
            if (u >= n || v >= n)
                throw FormatError("edges.tsv", lineno, "node id exceeds num_nodes-1 = " + std::to_string(n - 1));
            edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
        }
        ds.graph = build_graph(edges, n);
    }

    {
        auto in = open_input(dir / "features.csv");
        ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
        std::string line;
        std::size_t row = 0;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            if (row >= n) throw FormatError("features.csv", row + 1, "more feature rows than num_nodes");
            std::size_t col = 0;
            std::string_view rest(line);
            while (true) {
                const auto comma = rest.find(',');
                if (col >= d) throw FormatError("features.csv", row + 1, "more than num_features columns");
                ds.features(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) =
                    parse_number<double>(rest.substr(0, comma), "features.csv", row + 1);
                ++col;
                if (comma == std::string_view::npos) break;
                rest = rest.substr(comma + 1);
            }
            if (col != d) throw FormatError("features.csv", row + 1, "expected " + std::to_string(d) + " columns");
            ++row;
        }
        if (row != n)
            throw FormatError("features.csv", 0,
                              "has " + std::to_string(row) + " rows, expected " + std::to_string(n));
    }

    {
        auto in = open_input(dir / "labels.csv");
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            const int label = parse_number<int>(line, "labels.csv", lineno);
            if (label < kUnknownLabel || label >= c)
                throw FormatError("labels.csv", lineno, "label " + std::to_string(label) + " outside [-1, C)");
            ds.labels.push_back(label);
        }
        if (ds.labels.size() != n)
            throw FormatError("labels.csv", 0,
                              "has " + std::to_string(ds.labels.size()) + " rows, expected " + std::to_string(n));
    }

    {
        const json splits = read_json(dir / "splits.json");
        try {
            ds.train_mask = ids_to_mask(splits.at("train"), n, "train");
            ds.val_mask = ids_to_mask(splits.at("val"), n, "val");
            ds.test_mask = ids_to_mask(splits.at("test"), n, "test");
        } catch (const json::exception& e) {
            throw FormatError("splits.json", 0, e.what());
        }
    }

    try {
        ds.validate();
    } catch (const InputError& e) {
        throw FormatError("splits.json", 0, e.what());
    }
    return ds;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
    ds.validate();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());

    std::string body;
    for (const auto& [u, v] : ds.graph.edges()) {
        body += std::to_string(u);
        body += '\t';
        body += std::to_string(v);
        body += '\n';
    }
    write_text(dir / "edges.tsv", body);

    body.clear();
    for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
        for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
            if (j > 0) body += ',';
            append_real(body, ds.features(i, j));
        }
        body += '\n';
    }
    write_text(dir / "features.csv", body);

    body.clear();
    for (int label : ds.labels) {
        body += std::to_string(label);
        body += '\n';
    }
    write_text(dir / "labels.csv", body);

    json meta = {{"num_nodes", ds.num_nodes()}, {"num_features", ds.num_features()}, {"num_classes", ds.num_classes}};
    write_text(dir / "meta.json", meta.dump(2) + "\n");

    json splits = {{"train", ds.train_nodes()}, {"val", ds.val_nodes()}, {"test", ds.test_nodes()}};
    write_text(dir / "splits.json", splits.dump() + "\n");
}

}  // namespace chagnn
