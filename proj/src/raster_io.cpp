#include "canopy/raster_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <string>

#include "canopy/error.hpp"
#include "canopy/parallel.hpp"

namespace canopy {

namespace {

// TIFF tag numbers used by the subset.
enum Tag : std::uint16_t {
    kImageWidth = 256,
    kImageLength = 257,
    kBitsPerSample = 258,
    kCompression = 259,
    kPhotometric = 262,
    kStripOffsets = 273,
    kSamplesPerPixel = 277,
    kRowsPerStrip = 278,
    kStripByteCounts = 279,
    kPlanarConfig = 284,
    kPredictor = 317,
    kTileWidth = 322,
    kTileLength = 323,
    kTileOffsets = 324,
    kTileByteCounts = 325,
    kExtraSamples = 338,
    kSampleFormat = 339,
    kModelPixelScale = 33550,
    kModelTiepoint = 33922,
    kModelTransformation = 34264,
    kGeoKeyDirectory = 34735,
    kGeoDoubleParams = 34736,
    kGeoAsciiParams = 34737,
    kGdalNodata = 42113,
};

enum FieldType : std::uint16_t {
    kByte = 1,
    kAscii = 2,
    kShort = 3,
    kLong = 4,
    kRational = 5,
    kSByte = 6,
    kUndefined = 7,
    kSShort = 8,
    kSLong = 9,
    kSRational = 10,
    kFloat = 11,
    kDouble = 12,
};

constexpr std::uint16_t kGtCitationGeoKey = 1026;
// zlib cannot expand input by more than ~1032:1.
constexpr std::uint64_t kMaxDeflateRatio = 1032;

template <class Word>
Word swap_bytes(Word w) {
    if constexpr (sizeof(Word) == 1) {
        return w;
    } else {
        Word out = 0;
        for (std::size_t i = 0; i < sizeof(Word); ++i) out = static_cast<Word>(out << 8 | ((w >> (8 * i)) & 0xff));
        return out;
    }
}

std::size_t type_size(std::uint16_t type) {
    switch (type) {
        case kByte: case kAscii: case kSByte: case kUndefined: return 1;
        case kShort: case kSShort: return 2;
        case kLong: case kSLong: case kFloat: return 4;
        case kRational: case kSRational: case kDouble: return 8;
        default: return 0;
    }
}

class ByteReader {
public:
    ByteReader(ByteView bytes, bool big_endian) : bytes_(bytes), big_(big_endian) {}

    std::size_t size() const { return bytes_.size(); }
    bool big_endian() const { return big_; }

    void require(std::uint64_t offset, std::uint64_t len, const char* what) const {
        if (offset > bytes_.size() || len > bytes_.size() - offset)
            throw Malformed(std::string(what) + " extends past end of file", offset);
    }
    std::uint8_t u8(std::uint64_t off) const {
        require(off, 1, "byte");
        return bytes_[off];
    }
    std::uint16_t u16(std::uint64_t off) const {
        require(off, 2, "short");
        const auto* p = bytes_.data() + off;
        return big_ ? static_cast<std::uint16_t>(p[0] << 8 | p[1])
                    : static_cast<std::uint16_t>(p[1] << 8 | p[0]);
    }
    std::uint32_t u32(std::uint64_t off) const {
        require(off, 4, "long");
        const auto* p = bytes_.data() + off;
        if (big_)
            return std::uint32_t{p[0]} << 24 | std::uint32_t{p[1]} << 16 | std::uint32_t{p[2]} << 8 | p[3];
        return std::uint32_t{p[3]} << 24 | std::uint32_t{p[2]} << 16 | std::uint32_t{p[1]} << 8 | p[0];
    }
    std::uint64_t u64(std::uint64_t off) const {
        const std::uint64_t a = u32(off), b = u32(off + 4);
        return big_ ? (a << 32 | b) : (b << 32 | a);
    }
    const std::uint8_t* data(std::uint64_t off) const { return bytes_.data() + off; }

private:
    ByteView bytes_;
    bool big_;
};

struct IfdEntry {
    std::uint16_t tag = 0;
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::uint64_t data_offset = 0;   // absolute offset of the value bytes
    std::uint64_t entry_offset = 0;  // absolute offset of the 12-byte entry
};

class Ifd {
public:
    Ifd(const ByteReader& r, std::uint64_t offset) : r_(r) {
        const std::uint16_t n = r.u16(offset);
        if (n == 0) throw Malformed("IFD has no entries", offset);
        r.require(offset + 2, std::uint64_t{n} * 12 + 4, "IFD");
        for (std::uint16_t i = 0; i < n; ++i) {
            const std::uint64_t e = offset + 2 + std::uint64_t{i} * 12;
            IfdEntry entry;
            entry.tag = r.u16(e);
            entry.type = r.u16(e + 2);
            entry.count = r.u32(e + 4);
            entry.entry_offset = e;
            const std::size_t ts = type_size(entry.type);
            if (ts == 0) {
                // Unknown field types are tolerated for tags we never read.
                entries_.emplace(entry.tag, entry);
                continue;
            }
            const std::uint64_t bytes = std::uint64_t{entry.count} * ts;
            entry.data_offset = bytes <= 4 ? e + 8 : r.u32(e + 8);
            entries_.emplace(entry.tag, entry);
        }
    }

    bool has(std::uint16_t tag) const { return entries_.count(tag) != 0; }
    const IfdEntry& entry(std::uint16_t tag) const { return entries_.at(tag); }

    std::vector<std::uint64_t> uints(std::uint16_t tag) const {
        const IfdEntry& e = checked(tag);
        std::vector<std::uint64_t> out;
        out.reserve(e.count);
        for (std::uint32_t i = 0; i < e.count; ++i) {
            switch (e.type) {
                case kByte: case kUndefined: out.push_back(r_.u8(e.data_offset + i)); break;
                case kShort: out.push_back(r_.u16(e.data_offset + 2ull * i)); break;
                case kLong: out.push_back(r_.u32(e.data_offset + 4ull * i)); break;
                default:
                    throw Malformed("tag " + std::to_string(tag) + " has non-integer type " +
                                        std::to_string(e.type),
                                    e.entry_offset);
            }
        }
        return out;
    }

    std::uint64_t uint(std::uint16_t tag, std::uint64_t fallback) const {
        if (!has(tag)) return fallback;
        auto v = uints(tag);
        if (v.empty()) throw Malformed("tag " + std::to_string(tag) + " is empty", entry(tag).entry_offset);
        return v.front();
    }

    std::vector<double> doubles(std::uint16_t tag) const {
        const IfdEntry& e = checked(tag);
        std::vector<double> out;
        out.reserve(e.count);
        for (std::uint32_t i = 0; i < e.count; ++i) {
            switch (e.type) {
                case kDouble: out.push_back(std::bit_cast<double>(r_.u64(e.data_offset + 8ull * i))); break;
                case kFloat: out.push_back(std::bit_cast<float>(r_.u32(e.data_offset + 4ull * i))); break;
                case kShort: out.push_back(r_.u16(e.data_offset + 2ull * i)); break;
                case kLong: out.push_back(r_.u32(e.data_offset + 4ull * i)); break;
                default:
                    throw Malformed("tag " + std::to_string(tag) + " has non-numeric type", e.entry_offset);
            }
        }
        return out;
    }

    std::string ascii(std::uint16_t tag) const {
        const IfdEntry& e = checked(tag);
        if (e.type != kAscii && e.type != kByte && e.type != kUndefined)
            throw Malformed("tag " + std::to_string(tag) + " is not ASCII", e.entry_offset);
        std::string s(reinterpret_cast<const char*>(r_.data(e.data_offset)), e.count);
        while (!s.empty() && s.back() == '\0') s.pop_back();
        return s;
    }

private:
    const IfdEntry& checked(std::uint16_t tag) const {
        const IfdEntry& e = entries_.at(tag);
        const std::size_t ts = type_size(e.type);
        if (ts == 0)
            throw Malformed("tag " + std::to_string(tag) + " has unknown field type " + std::to_string(e.type),
                            e.entry_offset);
        r_.require(e.data_offset, std::uint64_t{e.count} * ts, "tag data");
        return e;
    }

    const ByteReader& r_;
    std::map<std::uint16_t, IfdEntry> entries_;
};

struct ChunkPlan {
    bool tiled = false;
    int chunk_w = 0;  // pixels per chunk row
    int chunk_h = 0;  // rows per chunk (full chunk)
    int across = 0;
    int down = 0;
    std::vector<std::uint64_t> offsets;
    std::vector<std::uint64_t> byte_counts;
};

struct Decoded {
    RasterHeader header;
    int samples_per_pixel = 1;
    bool predictor = false;
    bool deflate = false;
    ChunkPlan plan;
    std::uint64_t first_ifd = 0;
};

std::string crs_from_geokeys(const Ifd& ifd) {
    if (!ifd.has(kGeoKeyDirectory)) return {};
    const auto dir = ifd.uints(kGeoKeyDirectory);
    if (dir.size() < 4) throw Malformed("GeoKeyDirectory too short", ifd.entry(kGeoKeyDirectory).entry_offset);
    const std::uint64_t nkeys = dir[3];
    if (dir.size() < 4 + 4 * nkeys)
        throw Malformed("GeoKeyDirectory key count exceeds tag length", ifd.entry(kGeoKeyDirectory).entry_offset);
    // A directory holding only a citation key round-trips as plain text.
    if (nkeys == 1 && dir[4] == kGtCitationGeoKey && dir[5] == kGeoAsciiParams && ifd.has(kGeoAsciiParams)) {
        const std::string params = ifd.ascii(kGeoAsciiParams);
        const std::uint64_t count = dir[6], off = dir[7];
        if (off > params.size() || off + count > params.size() + 1)
            throw Malformed("GeoKey citation outside GeoAsciiParams", ifd.entry(kGeoAsciiParams).entry_offset);
        std::string s = params.substr(off, count);
        if (!s.empty() && s.back() == '|') s.pop_back();
        return s;
    }
    // Anything richer is carried as an opaque canonical dump.
    std::string s = "geokeys:";
    for (std::size_t i = 0; i < dir.size(); ++i) s += (i ? "," : "") + std::to_string(dir[i]);
    if (ifd.has(kGeoDoubleParams)) {
        s += "|";
        char buf[32];
        for (double d : ifd.doubles(kGeoDoubleParams)) {
            std::snprintf(buf, sizeof buf, "%.17g,", d);
            s += buf;
        }
    }
    if (ifd.has(kGeoAsciiParams)) s += "|" + ifd.ascii(kGeoAsciiParams);
    return s;
}

Decoded parse_header(ByteView bytes, bool allow_multiband) {
    if (bytes.size() < 8) throw Malformed("file shorter than TIFF header", bytes.size());
    bool big = false;
    if (bytes[0] == 'I' && bytes[1] == 'I') big = false;
    else if (bytes[0] == 'M' && bytes[1] == 'M') big = true;
    else throw Malformed("missing II/MM byte-order mark", 0);
    ByteReader r(bytes, big);
    const std::uint16_t version = r.u16(2);
    if (version == 43) throw UnsupportedFeature("BigTIFF", 2);
    if (version != 42) throw Malformed("bad TIFF version " + std::to_string(version), 2);

    Decoded d;
    d.first_ifd = r.u32(4);
    if (d.first_ifd < 8) throw Malformed("IFD offset points into header", 4);
    Ifd ifd(r, d.first_ifd);

    auto need = [&](std::uint16_t tag) {
        if (!ifd.has(tag)) throw Malformed("missing required tag " + std::to_string(tag), d.first_ifd);
    };
    need(kImageWidth);
    need(kImageLength);
    const std::uint64_t width = ifd.uint(kImageWidth, 0);
    const std::uint64_t height = ifd.uint(kImageLength, 0);
    if (width == 0 || height == 0 || width > 0x7fffffff || height > 0x7fffffff)
        throw Malformed("invalid image dimensions", ifd.entry(kImageWidth).entry_offset);

    const std::uint64_t spp = ifd.uint(kSamplesPerPixel, 1);
    const std::uint64_t spp_off = ifd.has(kSamplesPerPixel) ? ifd.entry(kSamplesPerPixel).entry_offset : d.first_ifd;
    if (spp == 0) throw Malformed("SamplesPerPixel = 0", spp_off);
    if (spp > 4 || (spp > 1 && !allow_multiband))
        throw UnsupportedFeature("SamplesPerPixel=" + std::to_string(spp) +
                                     (allow_multiband ? "" : " (use band extraction)"),
                                 spp_off);
    d.samples_per_pixel = static_cast<int>(spp);

    if (ifd.uint(kPlanarConfig, 1) != 1 && spp > 1)
        throw UnsupportedFeature("PlanarConfiguration=2", ifd.entry(kPlanarConfig).entry_offset);

    std::uint64_t bps = 1;
    if (ifd.has(kBitsPerSample)) {
        const auto v = ifd.uints(kBitsPerSample);
        if (v.empty()) throw Malformed("empty BitsPerSample", ifd.entry(kBitsPerSample).entry_offset);
        for (auto b : v)
            if (b != v.front())
                throw UnsupportedFeature("mixed BitsPerSample", ifd.entry(kBitsPerSample).entry_offset);
        bps = v.front();
    }
    std::uint64_t fmt = 1;
    if (ifd.has(kSampleFormat)) {
        const auto v = ifd.uints(kSampleFormat);
        if (v.empty()) throw Malformed("empty SampleFormat", ifd.entry(kSampleFormat).entry_offset);
        for (auto f : v)
            if (f != v.front())
                throw UnsupportedFeature("mixed SampleFormat", ifd.entry(kSampleFormat).entry_offset);
        fmt = v.front();
    }
    const std::uint64_t fmt_off = ifd.has(kBitsPerSample) ? ifd.entry(kBitsPerSample).entry_offset : d.first_ifd;
    SampleType st;
    if (bps == 8 && fmt == 1) st = SampleType::UInt8;
    else if (bps == 16 && fmt == 1) st = SampleType::UInt16;
    else if (bps == 32 && fmt == 3) st = SampleType::Float32;
    else
        throw UnsupportedFeature("BitsPerSample=" + std::to_string(bps) + " SampleFormat=" + std::to_string(fmt),
                                 fmt_off);

    const std::uint64_t compression = ifd.uint(kCompression, 1);
    if (compression == 8 || compression == 32946) d.deflate = true;
    else if (compression != 1)
        throw UnsupportedFeature("Compression=" + std::to_string(compression),
                                 ifd.entry(kCompression).entry_offset);

    const std::uint64_t predictor = ifd.uint(kPredictor, 1);
    if (predictor != 1 && predictor != 2)
        throw UnsupportedFeature("Predictor=" + std::to_string(predictor), ifd.entry(kPredictor).entry_offset);
    // Like libtiff, the predictor only applies to codecs that support it.
    d.predictor = predictor == 2 && d.deflate;

    const std::uint64_t photometric = ifd.uint(kPhotometric, 1);
    if (photometric > 5)
        throw UnsupportedFeature("PhotometricInterpretation=" + std::to_string(photometric),
                                 ifd.entry(kPhotometric).entry_offset);

    RasterHeader h;
    h.width = static_cast<int>(width);
    h.height = static_cast<int>(height);
    h.sample_type = st;

    ChunkPlan& plan = d.plan;
    if (ifd.has(kTileWidth) || ifd.has(kTileOffsets)) {
        need(kTileWidth);
        need(kTileLength);
        need(kTileOffsets);
        need(kTileByteCounts);
        const std::uint64_t tw = ifd.uint(kTileWidth, 0), th = ifd.uint(kTileLength, 0);
        if (tw == 0 || th == 0 || tw % 16 != 0 || th % 16 != 0 || tw > 65536 || th > 65536)
            throw Malformed("tile dimensions must be non-zero multiples of 16", ifd.entry(kTileWidth).entry_offset);
        plan.tiled = true;
        plan.chunk_w = static_cast<int>(tw);
        plan.chunk_h = static_cast<int>(th);
        plan.across = static_cast<int>((width + tw - 1) / tw);
        plan.down = static_cast<int>((height + th - 1) / th);
        plan.offsets = ifd.uints(kTileOffsets);
        plan.byte_counts = ifd.uints(kTileByteCounts);
        h.layout = StorageLayout::tiles(plan.chunk_w, plan.chunk_h);
    } else {
        need(kStripOffsets);
        need(kStripByteCounts);
        std::uint64_t rps = ifd.uint(kRowsPerStrip, height);
        if (rps == 0) throw Malformed("RowsPerStrip = 0", ifd.entry(kRowsPerStrip).entry_offset);
        const bool whole = rps >= height;
        rps = std::min(rps, height);
        plan.chunk_w = static_cast<int>(width);
        plan.chunk_h = static_cast<int>(rps);
        plan.across = 1;
        plan.down = static_cast<int>((height + rps - 1) / rps);
        plan.offsets = ifd.uints(kStripOffsets);
        plan.byte_counts = ifd.uints(kStripByteCounts);
        h.layout = StorageLayout::strips(whole ? 0 : static_cast<int>(rps));
    }
    const std::uint64_t chunks = std::uint64_t(plan.across) * std::uint64_t(plan.down);
    const std::uint16_t off_tag = plan.tiled ? kTileOffsets : kStripOffsets;
    if (plan.offsets.size() != chunks || plan.byte_counts.size() != chunks)
        throw Malformed("expected " + std::to_string(chunks) + " chunk offsets/byte counts",
                        ifd.entry(off_tag).entry_offset);

    // Georeferencing.
    if (ifd.has(kModelPixelScale) && ifd.has(kModelTiepoint)) {
        const auto scale = ifd.doubles(kModelPixelScale);
        const auto tie = ifd.doubles(kModelTiepoint);
        if (scale.size() < 2 || tie.size() < 6)
            throw Malformed("short ModelPixelScale/ModelTiepoint", ifd.entry(kModelPixelScale).entry_offset);
        h.geo.pixel_size_x = scale[0];
        h.geo.pixel_size_y = -scale[1];
        h.geo.origin_x = tie[3] - tie[0] * scale[0];
        h.geo.origin_y = tie[4] + tie[1] * scale[1];
    } else if (ifd.has(kModelTransformation)) {
        const auto m = ifd.doubles(kModelTransformation);
        if (m.size() < 16) throw Malformed("short ModelTransformation", ifd.entry(kModelTransformation).entry_offset);
        if (m[1] != 0.0 || m[4] != 0.0)
            throw UnsupportedFeature("rotated ModelTransformation", ifd.entry(kModelTransformation).entry_offset);
        h.geo = {m[3], m[7], m[0], m[5]};
    }
    if (!(h.geo.pixel_size_x > 0.0) || h.geo.pixel_size_y == 0.0 || std::isnan(h.geo.pixel_size_y) ||
        !std::isfinite(h.geo.origin_x) || !std::isfinite(h.geo.origin_y))
        throw Malformed("degenerate georeferencing",
                        ifd.has(kModelPixelScale) ? ifd.entry(kModelPixelScale).entry_offset : d.first_ifd);

    h.crs = crs_from_geokeys(ifd);

    if (ifd.has(kGdalNodata)) {
        const std::string s = ifd.ascii(kGdalNodata);
        char* end = nullptr;
        errno = 0;
        const float v = std::strtof(s.c_str(), &end);
        if (end == s.c_str())
            throw Malformed("unparseable GDAL_NODATA '" + s + "'", ifd.entry(kGdalNodata).entry_offset);
        h.nodata = v;
    }
    d.header = std::move(h);
    return d;
}

// Reverses horizontal differencing on native-order words.
template <class Word>
void undo_predictor(Word* row, std::size_t count, int spp) {
    for (std::size_t i = static_cast<std::size_t>(spp); i < count; ++i)
        row[i] = static_cast<Word>(row[i] + row[i - spp]);
}
template <class Word>
void apply_predictor(Word* row, std::size_t count, int spp) {
    for (std::size_t i = count; i-- > static_cast<std::size_t>(spp);)
        row[i] = static_cast<Word>(row[i] - row[i - spp]);
}

void inflate_exact(const std::uint8_t* src, std::size_t src_len, std::uint8_t* dst, std::size_t dst_len,
                   std::uint64_t offset) {
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) throw Malformed("zlib init failed", offset);
    zs.next_in = const_cast<Bytef*>(src);
    zs.avail_in = static_cast<uInt>(src_len);
    zs.next_out = dst;
    zs.avail_out = static_cast<uInt>(dst_len);
    int rc = Z_OK;
    while (zs.avail_out > 0) {
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc == Z_STREAM_END) break;
        if (rc != Z_OK) break;
        if (zs.avail_in == 0) break;
    }
    const std::size_t produced = dst_len - zs.avail_out;
    inflateEnd(&zs);
    if (rc != Z_OK && rc != Z_STREAM_END && rc != Z_BUF_ERROR)
        throw Malformed(std::string("deflate stream error") + (zs.msg ? std::string(": ") + zs.msg : ""), offset);
    if (produced < dst_len)
        throw Malformed("deflate chunk decodes to " + std::to_string(produced) + " of " + std::to_string(dst_len) +
                            " bytes",
                        offset);
}

Grid decode(ByteView bytes, bool allow_multiband, int band) {
    const Decoded d = parse_header(bytes, allow_multiband);
    if (band < 0 || band >= d.samples_per_pixel)
        throw InvalidArgument("band " + std::to_string(band) + " out of range (image has " +
                              std::to_string(d.samples_per_pixel) + ")");
    const RasterHeader& h = d.header;
    const ChunkPlan& plan = d.plan;
    const ByteReader r(bytes, bytes[0] == 'M');
    const std::size_t bps = bytes_per_sample(h.sample_type);
    const int spp = d.samples_per_pixel;

    auto chunk_rows = [&](int chunk_row) {
        if (plan.tiled) return plan.chunk_h;
        return std::min(plan.chunk_h, h.height - chunk_row * plan.chunk_h);
    };

    // Validate every chunk before allocating the output.
    std::uint64_t total_raw = 0;
    for (std::size_t i = 0; i < plan.offsets.size(); ++i) {
        const int cr = static_cast<int>(i) / plan.across;
        const std::uint64_t off = plan.offsets[i], len = plan.byte_counts[i];
        if (double(plan.chunk_w) * chunk_rows(cr) * spp * bps > 0x1p40)
            throw Malformed("chunk too large", off);
        const std::uint64_t raw = std::uint64_t(plan.chunk_w) * chunk_rows(cr) * spp * bps;
        r.require(off, len, "image chunk");
        if (d.deflate) {
            if (raw > len * kMaxDeflateRatio + 64)
                throw Malformed("deflate chunk too small for its decoded size", off);
        } else if (len < raw) {
            throw Malformed("uncompressed chunk shorter than its pixel data", off);
        }
        total_raw += raw;
    }
    (void)total_raw;

    std::vector<float> out(h.pixel_count());
    parallel_for(plan.offsets.size(), [&](std::size_t i) {
        const int cr = static_cast<int>(i) / plan.across;
        const int cc = static_cast<int>(i) % plan.across;
        const int rows = chunk_rows(cr);
        const std::size_t row_words = std::size_t(plan.chunk_w) * spp;
        const std::size_t raw = row_words * rows * bps;
        std::vector<std::uint8_t> buf(raw);
        const std::uint64_t off = plan.offsets[i];
        if (d.deflate) inflate_exact(r.data(off), plan.byte_counts[i], buf.data(), raw, off);
        else std::memcpy(buf.data(), r.data(off), raw);

        const bool swap = r.big_endian() != (std::endian::native == std::endian::big);
        const int x0 = cc * plan.chunk_w;
        const int y0 = cr * plan.chunk_h;
        const int copy_w = std::min(plan.chunk_w, h.width - x0);
        const int copy_h = std::min(rows, h.height - y0);
        auto scatter = [&]<class Word>(Word* words) {
            if (swap)
                for (std::size_t k = 0; k < row_words * rows; ++k) words[k] = swap_bytes(words[k]);
            if (d.predictor)
                for (int y = 0; y < rows; ++y) undo_predictor(words + y * row_words, row_words, spp);
            for (int y = 0; y < copy_h; ++y) {
                const Word* src = words + y * row_words;
                float* dst = out.data() + std::size_t(y0 + y) * h.width + x0;
                for (int x = 0; x < copy_w; ++x) {
                    const Word w = src[std::size_t(x) * spp + band];
                    if constexpr (sizeof(Word) == 4) dst[x] = std::bit_cast<float>(w);
                    else dst[x] = static_cast<float>(w);
                }
            }
        };
        switch (h.sample_type) {
            case SampleType::UInt8: scatter(buf.data()); break;
            case SampleType::UInt16: {
                std::vector<std::uint16_t> w(row_words * rows);
                std::memcpy(w.data(), buf.data(), raw);
                scatter(w.data());
                break;
            }
            case SampleType::Float32: {
                std::vector<std::uint32_t> w(row_words * rows);
                std::memcpy(w.data(), buf.data(), raw);
                scatter(w.data());
                break;
            }
        }
    });
    return Grid(h, std::move(out));
}

// ---- writing --------------------------------------------------------------

class TiffBuilder {
public:
    void put16(std::uint16_t v) { bytes.push_back(v & 0xff); bytes.push_back(v >> 8); }
    void put32(std::uint32_t v) { for (int i = 0; i < 4; ++i) bytes.push_back((v >> (8 * i)) & 0xff); }
    void put64(std::uint64_t v) { for (int i = 0; i < 8; ++i) bytes.push_back((v >> (8 * i)) & 0xff); }
    void patch32(std::size_t at, std::uint32_t v) { for (int i = 0; i < 4; ++i) bytes[at + i] = (v >> (8 * i)) & 0xff; }
    void align_word() { if (bytes.size() % 2) bytes.push_back(0); }

    struct Field {
        std::uint16_t tag, type;
        std::uint32_t count;
        std::vector<std::uint8_t> payload;  // little-endian values
    };
    std::vector<Field> fields;

    void shorts(std::uint16_t tag, const std::vector<std::uint16_t>& v) {
        Field f{tag, kShort, static_cast<std::uint32_t>(v.size()), {}};
        for (auto x : v) { f.payload.push_back(x & 0xff); f.payload.push_back(x >> 8); }
        fields.push_back(std::move(f));
    }
    void longs(std::uint16_t tag, const std::vector<std::uint32_t>& v) {
        Field f{tag, kLong, static_cast<std::uint32_t>(v.size()), {}};
        for (auto x : v) for (int i = 0; i < 4; ++i) f.payload.push_back((x >> (8 * i)) & 0xff);
        fields.push_back(std::move(f));
    }
    void doubles(std::uint16_t tag, const std::vector<double>& v) {
        Field f{tag, kDouble, static_cast<std::uint32_t>(v.size()), {}};
        for (double d : v) {
            const auto x = std::bit_cast<std::uint64_t>(d);
            for (int i = 0; i < 8; ++i) f.payload.push_back((x >> (8 * i)) & 0xff);
        }
        fields.push_back(std::move(f));
    }
    void ascii(std::uint16_t tag, const std::string& s) {
        Field f{tag, kAscii, static_cast<std::uint32_t>(s.size() + 1), {}};
        f.payload.assign(s.begin(), s.end());
        f.payload.push_back(0);
        fields.push_back(std::move(f));
    }

    // Appends the IFD (and out-of-line values) and points the header at it.
    void finish() {
        std::sort(fields.begin(), fields.end(), [](const Field& a, const Field& b) { return a.tag < b.tag; });
        align_word();
        // Out-of-line payloads first, then the IFD itself.
        std::vector<std::uint32_t> where(fields.size(), 0);
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (fields[i].payload.size() > 4) {
                align_word();
                where[i] = static_cast<std::uint32_t>(bytes.size());
                bytes.insert(bytes.end(), fields[i].payload.begin(), fields[i].payload.end());
            }
        }
        align_word();
        patch32(4, static_cast<std::uint32_t>(bytes.size()));
        put16(static_cast<std::uint16_t>(fields.size()));
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const Field& f = fields[i];
            put16(f.tag);
            put16(f.type);
            put32(f.count);
            if (f.payload.size() > 4) {
                put32(where[i]);
            } else {
                auto p = f.payload;
                p.resize(4, 0);
                bytes.insert(bytes.end(), p.begin(), p.end());
            }
        }
        put32(0);
    }

    Bytes bytes;
};

std::string format_nodata(float v, SampleType st) {
    if (std::isnan(v)) return "nan";
    char buf[48];
    if (st != SampleType::Float32 && v == std::floor(v)) std::snprintf(buf, sizeof buf, "%.0f", double(v));
    else std::snprintf(buf, sizeof buf, "%.9g", double(v));
    return buf;
}

template <class Word>
Word to_word(float v) {
    if constexpr (sizeof(Word) == 4) {
        return std::bit_cast<std::uint32_t>(v);
    } else {
        if (std::isnan(v)) return 0;
        const float hi = static_cast<float>(std::numeric_limits<Word>::max());
        return static_cast<Word>(std::lround(std::clamp(v, 0.0f, hi)));
    }
}

Bytes encode(std::span<const Grid* const> bands, const TiffWriteOptions& opt) {
    const RasterHeader& h = bands.front()->header();
    RasterHeader check = h;
    check.layout = opt.layout;
    check.validate();
    const int spp = static_cast<int>(bands.size());
    const std::size_t bps = bytes_per_sample(h.sample_type);
    const bool deflate = opt.compression == Compression::Deflate;
    const bool predictor = deflate && opt.predictor;
    const bool tiled = opt.layout.kind == StorageLayout::Kind::Tiles;

    int chunk_w, chunk_h, across, down;
    if (tiled) {
        chunk_w = opt.layout.tile_w;
        chunk_h = opt.layout.tile_h;
    } else {
        chunk_w = h.width;
        chunk_h = opt.layout.rows_per_strip > 0 ? std::min(opt.layout.rows_per_strip, h.height) : h.height;
    }
    across = (h.width + chunk_w - 1) / chunk_w;
    down = (h.height + chunk_h - 1) / chunk_h;
    const std::size_t nchunks = std::size_t(across) * down;

    std::vector<Bytes> chunks(nchunks);
    parallel_for(nchunks, [&](std::size_t i) {
        const int cr = static_cast<int>(i) / across, cc = static_cast<int>(i) % across;
        const int x0 = cc * chunk_w, y0 = cr * chunk_h;
        const int rows = tiled ? chunk_h : std::min(chunk_h, h.height - y0);
        const std::size_t row_words = std::size_t(chunk_w) * spp;
        auto fill = [&]<class Word>(std::vector<Word>& words) {
            words.assign(row_words * rows, Word{0});
            for (int y = 0; y < rows; ++y) {
                const int gy = y0 + y;
                if (gy >= h.height) break;
                for (int x = 0; x < chunk_w; ++x) {
                    const int gx = x0 + x;
                    if (gx >= h.width) break;
                    for (int b = 0; b < spp; ++b)
                        words[y * row_words + std::size_t(x) * spp + b] = to_word<Word>(bands[b]->at(gx, gy));
                }
                if (predictor) apply_predictor(words.data() + y * row_words, row_words, spp);
            }
            Bytes raw(words.size() * sizeof(Word));
            for (std::size_t k = 0; k < words.size(); ++k)
                for (std::size_t s = 0; s < sizeof(Word); ++s)
                    raw[k * sizeof(Word) + s] = static_cast<std::uint8_t>(std::uint64_t(words[k]) >> (8 * s));
            return raw;
        };
        Bytes raw;
        switch (h.sample_type) {
            case SampleType::UInt8: { std::vector<std::uint8_t> w; raw = fill(w); break; }
            case SampleType::UInt16: { std::vector<std::uint16_t> w; raw = fill(w); break; }
            case SampleType::Float32: { std::vector<std::uint32_t> w; raw = fill(w); break; }
        }
        if (!deflate) {
            chunks[i] = std::move(raw);
            return;
        }
        uLongf len = compressBound(static_cast<uLong>(raw.size()));
        Bytes packed(len);
        if (compress2(packed.data(), &len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
            throw Error("zlib compression failed");
        packed.resize(len);
        chunks[i] = std::move(packed);
    });

    TiffBuilder t;
    t.bytes = {'I', 'I', 42, 0, 0, 0, 0, 0};
    std::vector<std::uint32_t> offsets, counts;
    for (auto& c : chunks) {
        t.align_word();
        offsets.push_back(static_cast<std::uint32_t>(t.bytes.size()));
        counts.push_back(static_cast<std::uint32_t>(c.size()));
        t.bytes.insert(t.bytes.end(), c.begin(), c.end());
    }
    t.longs(kImageWidth, {static_cast<std::uint32_t>(h.width)});
    t.longs(kImageLength, {static_cast<std::uint32_t>(h.height)});
    t.shorts(kBitsPerSample, std::vector<std::uint16_t>(spp, static_cast<std::uint16_t>(bps * 8)));
    t.shorts(kCompression, {static_cast<std::uint16_t>(deflate ? 8 : 1)});
    t.shorts(kPhotometric, {static_cast<std::uint16_t>(spp >= 3 ? 2 : 1)});
    t.shorts(kSamplesPerPixel, {static_cast<std::uint16_t>(spp)});
    t.shorts(kPlanarConfig, {1});
    if (spp == 4) t.shorts(kExtraSamples, {0});
    if (predictor) t.shorts(kPredictor, {2});
    t.shorts(kSampleFormat, std::vector<std::uint16_t>(spp, h.sample_type == SampleType::Float32 ? 3 : 1));
    if (tiled) {
        t.longs(kTileWidth, {static_cast<std::uint32_t>(chunk_w)});
        t.longs(kTileLength, {static_cast<std::uint32_t>(chunk_h)});
        t.longs(kTileOffsets, offsets);
        t.longs(kTileByteCounts, counts);
    } else {
        t.longs(kRowsPerStrip, {static_cast<std::uint32_t>(chunk_h)});
        t.longs(kStripOffsets, offsets);
        t.longs(kStripByteCounts, counts);
    }
    t.doubles(kModelPixelScale, {h.geo.pixel_size_x, -h.geo.pixel_size_y, 0.0});
    t.doubles(kModelTiepoint, {0.0, 0.0, 0.0, h.geo.origin_x, h.geo.origin_y, 0.0});
    if (!h.crs.empty()) {
        const std::string citation = h.crs + "|";
        t.shorts(kGeoKeyDirectory,
                 {1, 1, 0, 1, kGtCitationGeoKey, kGeoAsciiParams, static_cast<std::uint16_t>(citation.size()), 0});
        t.ascii(kGeoAsciiParams, citation);
    }
    if (h.nodata) t.ascii(kGdalNodata, format_nodata(*h.nodata, h.sample_type));
    t.finish();
    return std::move(t.bytes);
}

// ---- internal format ------------------------------------------------------

constexpr char kInternalMagic[4] = {'C', 'C', 'R', '1'};

struct LeWriter {
    Bytes b;
    template <class T>
    void put(T v) {
        using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                  std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
        const U u = std::bit_cast<U>(v);
        for (std::size_t i = 0; i < sizeof(T); ++i) b.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
    }
};

}  // namespace

Grid read_geotiff(ByteView bytes) { return decode(bytes, false, 0); }

Grid read_geotiff_band(ByteView bytes, int band) { return decode(bytes, true, band); }

int geotiff_band_count(ByteView bytes) { return parse_header(bytes, true).samples_per_pixel; }

Bytes write_geotiff(const Grid& grid, const TiffWriteOptions& options) {
    const Grid* one[] = {&grid};
    return encode(one, options);
}

Bytes write_geotiff_bands(std::span<const Grid> bands, const TiffWriteOptions& options) {
    if (bands.size() != 3 && bands.size() != 4) throw InvalidArgument("multi-band images need 3 or 4 bands");
    std::vector<const Grid*> ptrs;
    for (const Grid& g : bands) {
        const auto& a = g.header();
        const auto& b = bands.front().header();
        if (a.width != b.width || a.height != b.height || a.sample_type != b.sample_type || !(a.geo == b.geo) ||
            a.crs != b.crs)
            throw InvalidArgument("bands must share geometry and sample type");
        ptrs.push_back(&g);
    }
    return encode(ptrs, options);
}

Bytes write_internal(const Grid& grid) {
    const RasterHeader& h = grid.header();
    LeWriter w;
    w.b.assign(kInternalMagic, kInternalMagic + 4);
    w.put(static_cast<std::uint32_t>(h.width));
    w.put(static_cast<std::uint32_t>(h.height));
    w.put(static_cast<std::uint8_t>(h.sample_type));
    w.put(static_cast<std::uint8_t>(h.nodata ? 1 : 0));
    w.put(static_cast<std::uint16_t>(0));
    w.put(h.nodata ? *h.nodata : 0.0f);
    w.put(h.geo.origin_x);
    w.put(h.geo.origin_y);
    w.put(h.geo.pixel_size_x);
    w.put(h.geo.pixel_size_y);
    w.put(static_cast<std::uint8_t>(h.layout.kind));
    w.put(static_cast<std::uint32_t>(h.layout.tile_w));
    w.put(static_cast<std::uint32_t>(h.layout.tile_h));
    w.put(static_cast<std::uint32_t>(h.layout.rows_per_strip));
    w.put(static_cast<std::uint32_t>(h.crs.size()));
    w.b.insert(w.b.end(), h.crs.begin(), h.crs.end());
    for (float v : grid.samples()) {
        switch (h.sample_type) {
            case SampleType::UInt8: w.put(to_word<std::uint8_t>(v)); break;
            case SampleType::UInt16: w.put(to_word<std::uint16_t>(v)); break;
            case SampleType::Float32: w.put(v); break;
        }
    }
    return std::move(w.b);
}

Grid read_internal(ByteView bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kInternalMagic, 4) != 0)
        throw Malformed("missing CCR1 magic", 0);
    const ByteReader r(bytes, false);
    std::uint64_t at = 4;
    auto u8 = [&] { auto v = r.u8(at); at += 1; return v; };
    auto u16 = [&] { auto v = r.u16(at); at += 2; return v; };
    auto u32 = [&] { auto v = r.u32(at); at += 4; return v; };
    auto f64 = [&] { auto v = std::bit_cast<double>(r.u64(at)); at += 8; return v; };

    RasterHeader h;
    const std::uint32_t width = u32(), height = u32();
    if (width == 0 || height == 0 || width > 0x7fffffff || height > 0x7fffffff)
        throw Malformed("invalid dimensions", 4);
    h.width = static_cast<int>(width);
    h.height = static_cast<int>(height);
    const std::uint64_t type_at = at;
    const std::uint8_t type = u8();
    if (type > 2) throw Malformed("unknown sample type " + std::to_string(type), type_at);
    h.sample_type = static_cast<SampleType>(type);
    const bool has_nodata = u8() != 0;
    u16();
    const float nodata = std::bit_cast<float>(u32());
    if (has_nodata) h.nodata = nodata;
    h.geo.origin_x = f64();
    h.geo.origin_y = f64();
    h.geo.pixel_size_x = f64();
    h.geo.pixel_size_y = f64();
    const std::uint64_t layout_at = at;
    const std::uint8_t kind = u8();
    if (kind > 1) throw Malformed("unknown layout kind", layout_at);
    h.layout.kind = static_cast<StorageLayout::Kind>(kind);
    h.layout.tile_w = static_cast<int>(u32());
    h.layout.tile_h = static_cast<int>(u32());
    h.layout.rows_per_strip = static_cast<int>(u32());
    const std::uint32_t crs_len = u32();
    r.require(at, crs_len, "CRS string");
    h.crs.assign(reinterpret_cast<const char*>(r.data(at)), crs_len);
    at += crs_len;
    try {
        h.validate();
    } catch (const InvalidArgument& e) {
        throw Malformed(e.what(), 4);
    }
    const std::size_t bps = bytes_per_sample(h.sample_type);
    const std::uint64_t n = h.pixel_count();
    if (n > (bytes.size() - std::min<std::uint64_t>(at, bytes.size())) / bps)
        throw Malformed("sample data truncated", at);
    std::vector<float> samples(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        switch (h.sample_type) {
            case SampleType::UInt8: samples[i] = r.u8(at); break;
            case SampleType::UInt16: samples[i] = r.u16(at); break;
            case SampleType::Float32: samples[i] = std::bit_cast<float>(r.u32(at)); break;
        }
        at += bps;
    }
    return Grid(std::move(h), std::move(samples));
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, ByteView bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to " + path.string());
}

Grid load_raster(const std::filesystem::path& path) {
    const Bytes b = read_file(path);
    if (b.size() >= 4 && std::memcmp(b.data(), kInternalMagic, 4) == 0) return read_internal(b);
    return read_geotiff(b);
}

Grid load_raster_band(const std::filesystem::path& path, int band) {
    return read_geotiff_band(read_file(path), band);
}

void save_geotiff(const std::filesystem::path& path, const Grid& grid, const TiffWriteOptions& options) {
    write_file(path, write_geotiff(grid, options));
}

}  // namespace canopy
