#include "step/bank_io.hpp"

#include <cctype>

#include "bytes.hpp"
#include "json.hpp"
#include "step/error.hpp"
#include "step/io.hpp"
#include "step/packed_ternary.hpp"

namespace step {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'S', 'T', 'E', 'P'};

json recipe_to_json(const KernelRecipe& r) {
    if (const auto* c = std::get_if<CsLbpParams>(&r)) {
        return {{"length", c->length}, {"pair_signs", c->pair_signs}};
    }
    if (const auto* h = std::get_if<HaarParams>(&r)) {
        json rects = json::array();
        for (const auto& q : h->rects) rects.push_back({q.row, q.col, q.ext_h, q.ext_w, q.sign});
        return {{"rects", rects}};
    }
    return nullptr;
}

KernelRecipe recipe_from_json(const json& j, Family family, const BankShape& shape) {
    if (j.is_null()) return std::monostate{};
    if (family == Family::CsLbp) {
        CsLbpParams p;
        p.num_pairs = static_cast<int>(shape.kernel_size() / 2);
        p.length = j.at("length").get<int>();
        p.pair_signs = j.at("pair_signs").get<std::vector<std::int8_t>>();
        return p;
    }
    if (family == Family::Haar) {
        HaarParams p;
        for (const auto& q : j.at("rects")) {
            p.rects.push_back({q.at(0).get<int>(), q.at(1).get<int>(), q.at(2).get<int>(), q.at(3).get<int>(),
                               q.at(4).get<std::int8_t>()});
        }
        return p;
    }
    return std::monostate{};
}

std::filesystem::path descriptor_path(const std::filesystem::path& blob) {
    auto p = blob;
    p += ".json";
    return p;
}

}  // namespace

std::vector<std::uint8_t> encode_bank_blob(const FilterBank& bank) {
    detail::ByteWriter w;
    for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
    w.u8(kBankBlobVersion);
    const auto& s = bank.shape();
    w.u32(static_cast<std::uint32_t>(s.h));
    w.u32(static_cast<std::uint32_t>(s.w));
    w.u32(static_cast<std::uint32_t>(s.k));
    w.u32(static_cast<std::uint32_t>(s.f));
    w.u8(static_cast<std::uint8_t>(bank.family()));
    w.u64(bank.seed());
    w.bytes(pack(bank.values()).bytes);
    return std::move(w.buffer());
}

FilterBank decode_bank_blob(std::span<const std::uint8_t> blob, std::uint64_t salt) {
    detail::ByteReader r(blob, "bank blob");
    for (char c : kMagic) {
        if (r.u8() != static_cast<std::uint8_t>(c)) throw FormatError("bank blob: bad magic");
    }
    const auto version = r.u8();
    if (version != kBankBlobVersion) throw FormatError("bank blob: unsupported version " + std::to_string(version));
    BankShape shape;
    shape.h = static_cast<int>(r.u32());
    shape.w = static_cast<int>(r.u32());
    shape.k = static_cast<int>(r.u32());
    shape.f = static_cast<int>(r.u32());
    if (shape.h <= 0 || shape.w <= 0 || shape.k <= 0 || shape.f <= 0) throw FormatError("bank blob: empty shape");
    const auto fam = r.u8();
    if (fam > static_cast<std::uint8_t>(Family::RandomBinary)) {
        throw FormatError("bank blob: unknown family " + std::to_string(fam));
    }
    const auto seed = r.u64();
    PackedTernary packed;
    packed.length = shape.element_count();
    const auto need = PackedTernary::bytes_for(packed.length);
    if (r.remaining() != need) {
        throw CorruptionError("bank blob: expected " + std::to_string(need) + " payload bytes, found " +
                              std::to_string(r.remaining()));
    }
    const auto payload = r.bytes(need);
    packed.bytes.assign(payload.begin(), payload.end());
    return FilterBank(shape, static_cast<Family>(fam), seed, salt, unpack(packed));
}

std::string bank_descriptor_json(const FilterBank& bank, const std::string& blob_name, int indent) {
    const auto& s = bank.shape();
    json recipes = json::array();
    for (const auto& r : bank.recipes()) recipes.push_back(recipe_to_json(r));
    json j = {
        {"format", "step-bank"},
        {"version", kBankBlobVersion},
        {"blob", blob_name},
        {"shape", {{"h", s.h}, {"w", s.w}, {"k", s.k}, {"f", s.f}}},
        {"family", std::string(family_name(bank.family()))},
        {"seed", bank.seed()},
        {"salt", bank.salt()},
        {"sparsity", sparsity(bank)},
        {"recipes", recipes},
    };
    return j.dump(indent);
}

void save_bank(const FilterBank& bank, const std::filesystem::path& blob_path) {
    write_file_atomic(blob_path, encode_bank_blob(bank));
    write_text_atomic(descriptor_path(blob_path), bank_descriptor_json(bank, blob_path.filename().string()) + "\n");
}

FilterBank load_bank(const std::filesystem::path& blob_path) {
    const auto blob = read_file(blob_path);
    FilterBank bank = decode_bank_blob(blob);
    const auto desc = descriptor_path(blob_path);
    if (!std::filesystem::exists(desc)) return bank;

    const auto text = read_file(desc);
    json j;
    try {
        j = json::parse(text.begin(), text.end());
        const auto& s = j.at("shape");
        const BankShape shape{s.at("h").get<int>(), s.at("w").get<int>(), s.at("k").get<int>(), s.at("f").get<int>()};
        if (!(shape == bank.shape()) || parse_family(j.at("family").get<std::string>()) != bank.family() ||
            j.at("seed").get<std::uint64_t>() != bank.seed()) {
            throw FormatError(desc.string() + ": descriptor does not match blob");
        }
        std::vector<KernelRecipe> recipes;
        for (const auto& r : j.at("recipes")) recipes.push_back(recipe_from_json(r, bank.family(), shape));
        if (!recipes.empty() && recipes.size() != shape.kernel_count()) {
            throw FormatError(desc.string() + ": recipe count does not match kernel count");
        }
        const std::vector<std::int8_t> values(bank.values().begin(), bank.values().end());
        return FilterBank(shape, bank.family(), bank.seed(), j.at("salt").get<std::uint64_t>(), values,
                          std::move(recipes));
    } catch (const json::exception& e) {
        throw FormatError(desc.string() + ": " + e.what());
    }
}

std::vector<std::filesystem::path> export_kernels_pgm(const FilterBank& bank, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    const auto& s = bank.shape();
    for (int f = 0; f < s.f; ++f) {
        for (int c = 0; c < s.k; ++c) {
            const auto k = bank.kernel(f, c);
            std::vector<std::uint8_t> out;
            const std::string header = "P5\n" + std::to_string(k.w) + " " + std::to_string(k.h) + "\n255\n";
            out.assign(header.begin(), header.end());
            for (auto v : k.values) out.push_back(v < 0 ? 0 : (v == 0 ? 128 : 255));
            auto path = dir / ("f" + std::to_string(f) + "_c" + std::to_string(c) + ".pgm");
            write_file_atomic(path, out);
            written.push_back(std::move(path));
        }
    }
    return written;
}

TernaryKernel read_kernel_pgm(const std::filesystem::path& file) {
    const auto raw = read_file(file);
    // Header: magic, width, height, maxval separated by whitespace, then one byte of whitespace.
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < raw.size() && std::isspace(raw[pos])) ++pos;
        std::string t;
        while (pos < raw.size() && !std::isspace(raw[pos])) t.push_back(static_cast<char>(raw[pos++]));
        return t;
    };
    if (token() != "P5") throw FormatError(file.string() + ": not a binary PGM");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(token());
        h = std::stoi(token());
        maxval = std::stoi(token());
    } catch (const std::exception&) {
        throw FormatError(file.string() + ": bad PGM header");
    }
    if (w <= 0 || h <= 0 || maxval != 255) throw FormatError(file.string() + ": unsupported PGM header");
    ++pos;
    const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (raw.size() < pos + n) throw FormatError(file.string() + ": truncated PGM");
    TernaryKernel k(h, w);
    for (std::size_t i = 0; i < n; ++i) {
        switch (raw[pos + i]) {
            case 0: k.values[i] = -1; break;
            case 128: k.values[i] = 0; break;
            case 255: k.values[i] = 1; break;
            default: throw FormatError(file.string() + ": gray level " + std::to_string(raw[pos + i]) + " is not ternary");
        }
    }
    return k;
}

}  // namespace step
