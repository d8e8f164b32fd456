#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "entromon/dynamics.hpp"
#include "entromon/errors.hpp"
#include "entromon/estimation.hpp"
#include "entromon/taxonomy.hpp"

namespace entromon {

/// Persisted trajectory record, one JSON object per line:
/// {"step", "entropy_nats", "probs": [5 numbers], "k_used", "prompt_id",
///  "model_id", "ts"}.
inline nlohmann::json record_to_json(const EntropySample& sample) {
    return nlohmann::json{
        {"step", sample.step},
        {"entropy_nats", sample.entropy_nats},
        {"probs", sample.dist.probs()},
        {"k_used", sample.k_used},
        {"prompt_id", sample.prompt_id},
        {"model_id", sample.model_id},
        {"ts", sample.ts},
    };
}

inline EntropySample record_from_json(const nlohmann::json& j) {
    EntropySample sample;
    try {
        sample.step = j.at("step").get<std::int64_t>();
        sample.entropy_nats = j.at("entropy_nats").get<double>();
        const auto& probs_json = j.at("probs");
        if (!probs_json.is_array() || probs_json.size() != 5) {
            throw ParseError("record probs must be 5 numbers");
        }
        std::array<double, 5> probs{};
        double sum = 0.0;
        for (std::size_t i = 0; i < 5; ++i) {
            probs[i] = probs_json[i].get<double>();
            sum += probs[i];
        }
        if (std::abs(sum - 1.0) > 1e-6) {
            throw ParseError("record probs sum to " + std::to_string(sum));
        }
        // Within the construction tolerance the parsed bits are kept
        // as-is so write/read round-trips exactly; looser (but still
        // schema-valid) external data is renormalized.
        sample.dist = std::abs(sum - 1.0) <= GoalDistribution::kSumTolerance
            ? GoalDistribution(probs)
            : GoalDistribution::normalized(probs);
        sample.k_used = j.at("k_used").get<int>();
        sample.prompt_id = j.at("prompt_id").get<std::string>();
        sample.model_id = j.at("model_id").get<std::string>();
        sample.ts = j.at("ts").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad trajectory record: ") + e.what());
    }
    if (std::abs(entropy(sample.dist) - sample.entropy_nats) > 1e-6) {
        throw ParseError("record entropy_nats does not match probs");
    }
    return sample;
}

/// Append-only JSONL writer. With rotation_bytes > 0 the stream rolls to
/// zero-padded numbered files (stem.00000.jsonl, stem.00001.jsonl, ...)
/// whenever the current file reaches the limit, so lexicographic filename
/// order stays chronological.
class JsonlWriter {
public:
    explicit JsonlWriter(std::filesystem::path path, std::uint64_t rotation_bytes = 0)
        : path_(std::move(path)), rotation_bytes_(rotation_bytes) {
        open_current();
    }

    void write(const nlohmann::json& j) {
        const std::string line = j.dump();
        if (rotation_bytes_ > 0 && written_ > 0 && written_ + line.size() + 1 > rotation_bytes_) {
            ++chunk_;
            open_current();
        }
        out_ << line << "\n";
        written_ += line.size() + 1;
        if (!out_) throw Error("write failed: " + current_path().string());
    }

    void flush() { out_.flush(); }

    std::filesystem::path current_path() const {
        if (rotation_bytes_ == 0) return path_;
        char suffix[16];
        std::snprintf(suffix, sizeof(suffix), ".%05d", chunk_);
        std::filesystem::path rolled = path_;
        rolled.replace_extension();
        return rolled.string() + suffix + path_.extension().string();
    }

    const std::vector<std::filesystem::path>& paths_written() const { return paths_; }

private:
    void open_current() {
        if (out_.is_open()) out_.close();
        const std::filesystem::path p = current_path();
        out_.open(p, std::ios::app);
        if (!out_) throw Error("cannot open for append: " + p.string());
        written_ = std::filesystem::exists(p) ? std::filesystem::file_size(p) : 0;
        paths_.push_back(p);
    }

    std::filesystem::path path_;
    std::uint64_t rotation_bytes_;
    std::ofstream out_;
    std::uint64_t written_ = 0;
    int chunk_ = 0;
    std::vector<std::filesystem::path> paths_;
};

inline void write_trajectory_jsonl(const std::filesystem::path& path, const Trajectory& traj) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open for write: " + path.string());
    for (const EntropySample& sample : traj.samples) {
        out << record_to_json(sample).dump() << "\n";
    }
    if (!out) throw Error("write failed: " + path.string());
}

inline Trajectory read_trajectory_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open trajectory file: " + path.string());
    Trajectory traj;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        traj.samples.push_back(record_from_json(j));
    }
    if (!traj.samples.empty()) traj.model_id = traj.samples.front().model_id;
    traj.validate();
    return traj;
}

/// Prompts file: UTF-8 text, one prompt per line, blank lines skipped.
inline std::vector<std::string> read_prompts_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open prompts file: " + path.string());
    std::vector<std::string> prompts;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) prompts.push_back(line);
    }
    return prompts;
}

} // namespace entromon
