#include "step/checkpoint.hpp"

#include <algorithm>

#include "bytes.hpp"
#include "step/error.hpp"
#include "step/io.hpp"
#include "step/packed_ternary.hpp"

namespace step {

using detail::ByteReader;
using detail::ByteWriter;

namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'T', 'P', 'C'};

enum ParamFlag : std::uint8_t { kTrainable = 1, kDecay = 2, kClamp = 4 };

void put_geom(ByteWriter& w, const ConvGeometry& g) {
    w.u32(static_cast<std::uint32_t>(g.stride));
    w.u32(static_cast<std::uint32_t>(g.padding));
}

ConvGeometry get_geom(ByteReader& r) {
    ConvGeometry g;
    g.stride = static_cast<int>(r.u32());
    g.padding = static_cast<int>(r.u32());
    if (g.stride < 1 || g.padding < 0) throw FormatError("checkpoint: bad convolution geometry");
    return g;
}

void put_bank(ByteWriter& w, const FilterBank& b) {
    w.u8(static_cast<std::uint8_t>(b.family()));
    w.u64(b.seed());
    w.u64(b.salt());
    const auto& s = b.shape();
    w.u32(static_cast<std::uint32_t>(s.h));
    w.u32(static_cast<std::uint32_t>(s.w));
    w.u32(static_cast<std::uint32_t>(s.k));
    w.u32(static_cast<std::uint32_t>(s.f));
    const auto packed = pack(b.values());
    w.u64(packed.bytes.size());
    w.bytes(packed.bytes);
}

FilterBank get_bank(ByteReader& r) {
    const auto fam = r.u8();
    if (fam > static_cast<std::uint8_t>(Family::RandomBinary)) throw FormatError("checkpoint: unknown bank family");
    const auto seed = r.u64();
    const auto salt = r.u64();
    BankShape s;
    s.h = static_cast<int>(r.u32());
    s.w = static_cast<int>(r.u32());
    s.k = static_cast<int>(r.u32());
    s.f = static_cast<int>(r.u32());
    if (s.h <= 0 || s.w <= 0 || s.k <= 0 || s.f <= 0) throw FormatError("checkpoint: empty bank shape");
    PackedTernary packed;
    packed.length = s.element_count();
    const auto n = r.u64();
    if (n != PackedTernary::bytes_for(packed.length)) throw CorruptionError("checkpoint: bank blob length mismatch");
    const auto b = r.bytes(n);
    packed.bytes.assign(b.begin(), b.end());
    return FilterBank(s, static_cast<Family>(fam), seed, salt, unpack(packed));
}

void put_param(ByteWriter& w, const Parameter<float>& p) {
    w.str(p.name);
    w.u8(static_cast<std::uint8_t>((p.trainable ? kTrainable : 0) | (p.decay ? kDecay : 0) |
                                   (p.clamp_unit ? kClamp : 0)));
    w.u32(static_cast<std::uint32_t>(p.dims.size()));
    for (int d : p.dims) w.u32(static_cast<std::uint32_t>(d));
    w.u64(p.value.size());
    for (float v : p.value) w.f32(v);
}

// Reads a parameter record into `p`, which already has the expected name and dims.
void get_param(ByteReader& r, Parameter<float>& p) {
    const auto name = r.str();
    const auto flags = r.u8();
    const auto nd = r.u32();
    if (nd > 8) throw FormatError("checkpoint: parameter '" + name + "' has " + std::to_string(nd) + " dims");
    std::vector<int> dims(nd);
    for (auto& d : dims) d = static_cast<int>(r.u32());
    if (name != p.name || dims != p.dims) {
        throw FormatError("checkpoint: parameter '" + name + "' does not match layer parameter '" + p.name + "'");
    }
    const auto count = r.u64();
    if (count != p.value.size()) throw FormatError("checkpoint: parameter '" + name + "' has wrong element count");
    for (auto& v : p.value) v = r.f32();
    p.trainable = (flags & kTrainable) != 0;
    p.decay = (flags & kDecay) != 0;
    p.clamp_unit = (flags & kClamp) != 0;
}

void put_floats(ByteWriter& w, const std::vector<float>& v) {
    for (float x : v) w.f32(x);
}

void put_layer(ByteWriter& w, const LayerNode<float>& node) {
    w.u8(static_cast<std::uint8_t>(kind_of(node)));
    std::visit([&](const auto& l) {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, TernaryConvLayer<float>>) {
            put_geom(w, l.geom);
            put_bank(w, *l.bank);
        } else if constexpr (std::is_same_v<L, FloatConvLayer<float>>) {
            put_geom(w, l.geom);
            put_param(w, l.weight);
        } else if constexpr (std::is_same_v<L, Conv1x1Layer<float>>) {
            put_param(w, l.weight);
        } else if constexpr (std::is_same_v<L, StepBlockLayer<float>>) {
            put_geom(w, l.geom);
            w.u8(static_cast<std::uint8_t>(l.fusion));
            put_bank(w, *l.cslbp);
            put_bank(w, *l.haar);
            if (l.fusion == Fusion::Conv1x1) put_param(w, l.fuse.weight);
        } else if constexpr (std::is_same_v<L, BatchNormLayer<float>>) {
            w.u32(static_cast<std::uint32_t>(l.channels()));
            w.f32(l.eps);
            w.f32(l.momentum);
            put_param(w, l.gamma);
            put_param(w, l.beta);
            put_floats(w, l.running_mean);
            put_floats(w, l.running_var);
        } else if constexpr (std::is_same_v<L, LeakyReluLayer<float>>) {
            w.f32(l.slope);
        } else if constexpr (std::is_same_v<L, AvgPoolLayer<float>>) {
            w.u32(static_cast<std::uint32_t>(l.size));
            w.u32(static_cast<std::uint32_t>(l.stride));
        } else if constexpr (std::is_same_v<L, DenseLayer<float>>) {
            put_param(w, l.weight);
            put_param(w, l.bias);
        }
    }, node);
}

int positive(std::uint32_t v, const char* what) {
    if (v == 0 || v > (1u << 24)) throw FormatError(std::string("checkpoint: bad ") + what);
    return static_cast<int>(v);
}

LayerNode<float> get_layer(ByteReader& r) {
    const auto kind = r.u8();
    switch (static_cast<LayerKind>(kind)) {
        case LayerKind::TernaryConv: {
            const auto g = get_geom(r);
            return TernaryConvLayer<float>(get_bank(r), g);
        }
        case LayerKind::FloatConv: {
            const auto g = get_geom(r);
            const auto name = r.str();
            const auto flags = r.u8();
            if (name != "weight" || r.u32() != 4) throw FormatError("checkpoint: conv weight must have 4 dims");
            int d[4];
            for (int& v : d) v = positive(r.u32(), "conv weight dims");
            FloatConvLayer<float> l(d[0], d[1], d[2], d[3], g);
            l.weight.trainable = (flags & kTrainable) != 0;
            l.weight.decay = (flags & kDecay) != 0;
            l.weight.clamp_unit = (flags & kClamp) != 0;
            if (r.u64() != l.weight.value.size()) throw FormatError("checkpoint: conv weight element count");
            for (auto& v : l.weight.value) v = r.f32();
            return l;
        }
        case LayerKind::Conv1x1: {
            const auto name = r.str();
            const auto flags = r.u8();
            if (r.u32() != 2) throw FormatError("checkpoint: 1x1 weight must have 2 dims");
            const int out = positive(r.u32(), "1x1 dims");
            const int in = positive(r.u32(), "1x1 dims");
            Conv1x1Layer<float> l(out, in, (flags & kClamp) != 0, name);
            l.weight.trainable = (flags & kTrainable) != 0;
            l.weight.decay = (flags & kDecay) != 0;
            if (r.u64() != l.weight.value.size()) throw FormatError("checkpoint: 1x1 weight element count");
            for (auto& v : l.weight.value) v = r.f32();
            return l;
        }
        case LayerKind::StepBlock: {
            const auto g = get_geom(r);
            const auto f = r.u8();
            if (f > static_cast<std::uint8_t>(Fusion::Conv1x1)) throw FormatError("checkpoint: unknown fusion");
            auto cs = get_bank(r);
            auto hr = get_bank(r);
            StepBlockLayer<float> l(std::move(cs), std::move(hr), g, static_cast<Fusion>(f));
            if (l.fusion == Fusion::Conv1x1) get_param(r, l.fuse.weight);
            return l;
        }
        case LayerKind::BatchNorm: {
            BatchNormLayer<float> l(positive(r.u32(), "batch norm channels"));
            l.eps = r.f32();
            l.momentum = r.f32();
            get_param(r, l.gamma);
            get_param(r, l.beta);
            for (auto& v : l.running_mean) v = r.f32();
            for (auto& v : l.running_var) v = r.f32();
            return l;
        }
        case LayerKind::LeakyRelu:
            return LeakyReluLayer<float>(r.f32());
        case LayerKind::AvgPool: {
            const int size = positive(r.u32(), "pool size");
            const int stride = positive(r.u32(), "pool stride");
            return AvgPoolLayer<float>(size, stride);
        }
        case LayerKind::Flatten:
            return FlattenLayer<float>{};
        case LayerKind::Dense: {
            const auto name = r.str();
            const auto flags = r.u8();
            if (name != "weight" || r.u32() != 2) throw FormatError("checkpoint: dense weight must have 2 dims");
            const int out = positive(r.u32(), "dense dims");
            const int in = positive(r.u32(), "dense dims");
            DenseLayer<float> l(in, out);
            l.weight.trainable = (flags & kTrainable) != 0;
            l.weight.decay = (flags & kDecay) != 0;
            l.weight.clamp_unit = (flags & kClamp) != 0;
            if (r.u64() != l.weight.value.size()) throw FormatError("checkpoint: dense weight element count");
            for (auto& v : l.weight.value) v = r.f32();
            get_param(r, l.bias);
            return l;
        }
    }
    throw FormatError("checkpoint: unknown layer kind " + std::to_string(kind));
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ModelGraph<float>& model, std::uint64_t trained_epochs) {
    ByteWriter p;
    p.str(model.config_echo);
    const auto& in = model.input_shape();
    p.u32(static_cast<std::uint32_t>(in.c));
    p.u32(static_cast<std::uint32_t>(in.h));
    p.u32(static_cast<std::uint32_t>(in.w));
    p.u32(static_cast<std::uint32_t>(model.num_classes()));
    p.u64(trained_epochs);
    p.u32(static_cast<std::uint32_t>(model.layers().size()));
    for (const auto& node : model.layers()) put_layer(p, node);

    const auto& payload = p.buffer();
    ByteWriter out;
    out.bytes(kMagic);
    out.u32(kCheckpointVersion);
    out.u64(detail::fnv1a64(payload));
    out.u64(payload.size());
    out.bytes(payload);
    return std::move(out.buffer());
}

LoadedCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    ByteReader h(bytes, "checkpoint header");
    const auto magic = h.bytes(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError("checkpoint: bad magic");
    const auto version = h.u32();
    if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    const auto hash = h.u64();
    const auto length = h.u64();
    if (length != h.remaining()) {
        throw CorruptionError("checkpoint: payload length " + std::to_string(h.remaining()) + ", header says " +
                              std::to_string(length));
    }
    const auto payload = h.bytes(length);
    if (detail::fnv1a64(payload) != hash) throw CorruptionError("checkpoint: payload hash mismatch");

    ByteReader r(payload, "checkpoint payload");
    LoadedCheckpoint out;
    auto echo = r.str();
    Shape4 in;
    in.n = 1;
    in.c = positive(r.u32(), "input channels");
    in.h = positive(r.u32(), "input height");
    in.w = positive(r.u32(), "input width");
    const int classes = positive(r.u32(), "class count");
    out.trained_epochs = r.u64();
    out.model = ModelGraph<float>(in, classes);
    out.model.config_echo = std::move(echo);
    const auto n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        try {
            out.model.add(get_layer(r));
        } catch (const ShapeError& e) {
            throw FormatError("checkpoint: layer " + std::to_string(i) + ": " + e.what());
        }
    }
    if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes after last layer");
    out.model.validate();
    return out;
}

void save_checkpoint(const ModelGraph<float>& model, const std::filesystem::path& path, std::uint64_t trained_epochs) {
    write_file_atomic(path, encode_checkpoint(model, trained_epochs));
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return decode_checkpoint(bytes);
}

}  // namespace step
