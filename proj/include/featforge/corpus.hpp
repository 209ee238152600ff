#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace featforge {

struct Document {
    std::string id;
    std::string raw_text;
    int label = 0;  // 1 = real, 0 = fake
};

using Corpus = std::vector<Document>;

enum class CorpusFormat { csv, jsonl };

struct SplitRatios {
    double train = 0.65;
    double val = 0.15;
    double test = 0.20;
};

struct DatasetSplit {
    Corpus train, val, test;
    std::uint64_t seed = 0;
    SplitRatios ratios;
};

namespace detail {

inline int parse_label(const nlohmann::json& j, std::size_t line_no) {
    if (j.is_number_integer()) {
        const int v = j.get<int>();
        if (v == 0 || v == 1) return v;
    } else if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "fake" || s == "0") return 0;
        if (s == "real" || s == "1") return 1;
    }
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": label must be 0/1 or \"fake\"/\"real\"");
}

inline int parse_label(const std::string& s, std::size_t line_no) {
    if (s == "0" || s == "fake") return 0;
    if (s == "1" || s == "real") return 1;
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": label must be 0/1 or \"fake\"/\"real\", got '" + s + "'");
}

// One RFC-4180 record; handles quoted fields with embedded commas, quotes
// and newlines. Returns nullopt at EOF.
inline std::optional<std::vector<std::string>> read_csv_record(std::istream& is,
                                                               std::size_t& line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool in_quotes = false, any = false;
    int ch;
    while ((ch = is.get()) != EOF) {
        any = true;
        const char c = static_cast<char>(ch);
        if (in_quotes) {
            if (c == '"') {
                if (is.peek() == '"') { cur.push_back('"'); is.get(); }
                else in_quotes = false;
            } else {
                if (c == '\n') ++line_no;
                cur.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c == '\n') {
            ++line_no;
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            fields.push_back(std::move(cur));
            return fields;
        } else {
            cur.push_back(c);
        }
    }
    if (!any) return std::nullopt;
    if (!cur.empty() && cur.back() == '\r') cur.pop_back();
    fields.push_back(std::move(cur));
    return fields;
}

}  // namespace detail

inline Corpus load_corpus(const std::string& path, CorpusFormat format) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("missing corpus file: " + path);
    Corpus corpus;
    std::size_t auto_id = 0;
    auto next_id = [&auto_id] { return "doc" + std::to_string(auto_id++); };

    if (format == CorpusFormat::jsonl) {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            if (line.empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": malformed JSON (" + e.what() + ")");
            }
            if (!j.contains("text") || !j.contains("label"))
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": record needs 'text' and 'label'");
            Document d;
            d.raw_text = j["text"].get<std::string>();
            d.label = detail::parse_label(j["label"], line_no);
            d.id = j.contains("id") ? j["id"].get<std::string>() : next_id();
            corpus.push_back(std::move(d));
        }
    } else {
        std::size_t line_no = 1;
        auto header = detail::read_csv_record(is, line_no);
        if (!header) throw std::runtime_error("empty corpus");
        int text_col = -1, label_col = -1, id_col = -1;
        for (std::size_t c = 0; c < header->size(); ++c) {
            if ((*header)[c] == "text") text_col = static_cast<int>(c);
            else if ((*header)[c] == "label") label_col = static_cast<int>(c);
            else if ((*header)[c] == "id") id_col = static_cast<int>(c);
        }
        if (text_col < 0 || label_col < 0)
            throw std::runtime_error("CSV header must contain 'text' and 'label' columns");
        while (auto rec = detail::read_csv_record(is, line_no)) {
            if (rec->size() == 1 && (*rec)[0].empty()) continue;  // trailing blank line
            if (rec->size() < header->size())
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": too few CSV fields");
            Document d;
            d.raw_text = (*rec)[text_col];
            d.label = detail::parse_label((*rec)[label_col], line_no);
            d.id = id_col >= 0 ? (*rec)[id_col] : next_id();
            corpus.push_back(std::move(d));
        }
    }
    if (corpus.empty()) throw std::runtime_error("empty corpus");
    return corpus;
}

// Exact-text duplicate diagnostic (documents are never dropped).
inline std::size_t count_duplicate_texts(const Corpus& corpus) {
    std::unordered_map<std::string, std::size_t> seen;
    std::size_t dups = 0;
    for (const auto& d : corpus)
        if (++seen[d.raw_text] > 1) ++dups;
    return dups;
}

// Seeded shuffle then partition. Rounding rule: train gets floor(N*train),
// val gets floor(N*val), test takes the remainder.
inline DatasetSplit split_dataset(const Corpus& corpus, SplitRatios ratios,
                                  std::uint64_t seed, bool stratified = true) {
    const double sum = ratios.train + ratios.val + ratios.test;
    if (ratios.train <= 0 || ratios.val <= 0 || ratios.test <= 0 ||
        std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("split ratios must be positive and sum to 1");
    if (corpus.empty()) throw std::invalid_argument("cannot split empty corpus");

    DatasetSplit out;
    out.seed = seed;
    out.ratios = ratios;

    auto partition = [&](std::vector<std::size_t> idx) {
        std::mt19937_64 rng(seed);
        std::shuffle(idx.begin(), idx.end(), rng);
        const std::size_t n = idx.size();
        const auto n_train = static_cast<std::size_t>(n * ratios.train);
        const auto n_val = static_cast<std::size_t>(n * ratios.val);
        for (std::size_t k = 0; k < n; ++k) {
            const Document& d = corpus[idx[k]];
            if (k < n_train) out.train.push_back(d);
            else if (k < n_train + n_val) out.val.push_back(d);
            else out.test.push_back(d);
        }
    };

    if (stratified) {
        std::vector<std::size_t> class0, class1;
        for (std::size_t i = 0; i < corpus.size(); ++i)
            (corpus[i].label == 0 ? class0 : class1).push_back(i);
        if (class0.size() < 3 || class1.size() < 3)
            throw std::invalid_argument(
                "stratified split needs at least 3 documents per class");
        partition(std::move(class0));
        partition(std::move(class1));
    } else {
        std::vector<std::size_t> idx(corpus.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        partition(std::move(idx));
    }
    return out;
}

}  // namespace featforge
