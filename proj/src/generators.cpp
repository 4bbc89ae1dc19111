#include "reloss/generators.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace reloss {

void GeneratorConfig::validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("generator p must lie in [0, 1]");
    if (sub_batch == 0) throw UsageError("sub-batch size must be at least 1");
    if (task == TaskKind::Classification && num_classes < 2) {
        throw UsageError("classification needs at least 2 classes");
    }
    if (task == TaskKind::Synthetic && input_width == 0) throw UsageError("input width must be positive");
}

void write_dump(const PredictionDump& dump, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "label";
    for (std::size_t c = 0; c < dump.num_classes; ++c) out << ",p" << c;
    out << '\n';
    char buf[32];
    for (std::size_t r = 0; r < dump.rows(); ++r) {
        out << dump.labels[r];
        for (std::size_t c = 0; c < dump.num_classes; ++c) {
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(dump.probs[r * dump.num_classes + c]));
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

PredictionDump read_dump(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("prediction dump not found: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty dump");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 3 || header[0] != "label") {
        throw FormatError(path.string() + ": header must be label,p0,p1,...");
    }
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c] != "p" + std::to_string(c - 1)) {
            throw FormatError(path.string() + ": unexpected header column '" + header[c] + "'");
        }
    }
    PredictionDump dump;
    dump.num_classes = header.size() - 1;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (cells.size() != header.size()) throw FormatError(where + ": wrong column count");
        try {
            std::size_t used = 0;
            const unsigned long label = std::stoul(cells[0], &used);
            if (used != cells[0].size() || label >= dump.num_classes) {
                throw FormatError(where + ": bad label");
            }
            dump.labels.push_back(static_cast<std::uint32_t>(label));
            for (std::size_t c = 1; c < cells.size(); ++c) {
                const float v = std::stof(cells[c], &used);
                if (used != cells[c].size() || !(v >= 0.0f)) throw FormatError(where + ": bad probability");
                dump.probs.push_back(v);
            }
        } catch (const std::logic_error&) {
            throw FormatError(where + ": unparsable value");
        }
    }
    if (dump.rows() == 0) throw FormatError(path.string() + ": dump has no rows");
    return dump;
}

BatchSample gen_random_batch(const GeneratorConfig& cfg, Rng& rng) {
    BatchSample batch;
    batch.size = cfg.sub_batch;
    if (cfg.task == TaskKind::Synthetic) {
        batch.width = cfg.input_width;
        batch.predictions.resize(batch.size * batch.width);
        for (float& v : batch.predictions) v = static_cast<float>(cfg.input_scale * rng.normal());
        return batch;
    }
    const std::size_t k = cfg.num_classes;
    batch.width = k;
    batch.predictions.resize(batch.size * k);
    batch.labels.resize(batch.size);
    std::vector<double> row(k);
    for (std::size_t i = 0; i < batch.size; ++i) {
        batch.labels[i] = static_cast<std::uint32_t>(rng.below(k));
        double total = 0.0;
        for (double& v : row) {
            do {
                v = rng.uniform();
            } while (v <= 0.0);
            total += v;
        }
        float renorm = 0.0f;
        for (std::size_t c = 0; c < k; ++c) {
            const auto p = static_cast<float>(row[c] / total);
            batch.predictions[i * k + c] = p;
            renorm += p;
        }
        for (std::size_t c = 0; c < k; ++c) batch.predictions[i * k + c] /= renorm;
    }
    return batch;
}

BatchSample gen_model_batch(const GeneratorConfig& cfg, std::span<const PredictionDump> dumps,
                            Rng& rng) {
    if (dumps.empty()) throw IoError("model generator has no prediction dumps");
    const PredictionDump& dump = dumps[rng.below(dumps.size())];
    if (dump.num_classes != cfg.num_classes) {
        throw FormatError("dump has " + std::to_string(dump.num_classes) + " classes, expected " +
                          std::to_string(cfg.num_classes));
    }
    const std::size_t rows = dump.rows();
    const std::size_t take = cfg.sub_batch;
    if (rows < take) {
        throw FormatError("dump has " + std::to_string(rows) + " rows, fewer than the sub-batch size " +
                          std::to_string(take));
    }
    // partial Fisher-Yates, then restore file order
    std::vector<std::size_t> idx(rows);
    for (std::size_t i = 0; i < rows; ++i) idx[i] = i;
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + rng.below(rows - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(take);
    std::sort(idx.begin(), idx.end());

    BatchSample batch;
    batch.size = take;
    batch.width = dump.num_classes;
    batch.labels.reserve(take);
    batch.predictions.reserve(take * batch.width);
    for (std::size_t r : idx) {
        batch.labels.push_back(dump.labels[r]);
        auto first = dump.probs.begin() + static_cast<std::ptrdiff_t>(r * batch.width);
        batch.predictions.insert(batch.predictions.end(), first, first + static_cast<std::ptrdiff_t>(batch.width));
    }
    return batch;
}

BatchSampler::BatchSampler(GeneratorConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    for (const auto& path : cfg_.dump_paths) dumps_.push_back(read_dump(path));
}

BatchSampler::BatchSampler(GeneratorConfig cfg, std::vector<PredictionDump> dumps)
    : cfg_(std::move(cfg)), dumps_(std::move(dumps)) {
    cfg_.validate();
}

BatchSample BatchSampler::sample(Rng& rng, bool* from_random) const {
    // The Bernoulli draw is always consumed so p does not shift later streams.
    const bool use_random = rng.bernoulli(cfg_.p) || cfg_.p >= 1.0;
    if (from_random) *from_random = use_random;
    if (use_random) return gen_random_batch(cfg_, rng);
    return gen_model_batch(cfg_, dumps_, rng);
}

}  // namespace reloss
