#include "tcpipe/plugins/pcap.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <optional>

#include "tcpipe/core/wire.hpp"

namespace tcpipe {

namespace {

struct GlobalHeader {
  std::uint32_t magic = kPcapMagic;
  std::uint16_t major = 2;
  std::uint16_t minor = 4;
  std::int32_t thiszone = 0;
  std::uint32_t sigfigs = 0;
  std::uint32_t snaplen = 65535;
  std::uint32_t network = kPcapLinktypeEthernet;
};
static_assert(sizeof(GlobalHeader) == 24);

struct RecordHeader {
  std::uint32_t ts_sec;
  std::uint32_t ts_usec;
  std::uint32_t incl_len;
  std::uint32_t orig_len;
};
static_assert(sizeof(RecordHeader) == 16);

}  // namespace

PcapWriter::PcapWriter() {
  GlobalHeader h;
  emit(&h, sizeof(h));
}

PcapWriter::PcapWriter(const std::string& path)
    : file_(std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc)) {
  if (!*file_) throw std::runtime_error("cannot open pcap file " + path);
  GlobalHeader h;
  emit(&h, sizeof(h));
}

void PcapWriter::emit(const void* p, std::size_t n) {
  if (file_) {
    file_->write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  } else {
    const auto* b = static_cast<const std::uint8_t*>(p);
    mem_.insert(mem_.end(), b, b + n);
  }
}

void PcapWriter::write(std::span<const std::uint8_t> frame, TimeNs t) {
  const std::uint32_t snap = 65535;
  RecordHeader r;
  r.ts_sec = static_cast<std::uint32_t>(t / kNsPerSec);
  r.ts_usec = static_cast<std::uint32_t>((t % kNsPerSec) / kNsPerUs);
  r.orig_len = static_cast<std::uint32_t>(frame.size());
  r.incl_len = std::min(r.orig_len, snap);
  std::lock_guard lock(mu_);
  emit(&r, sizeof(r));
  emit(frame.data(), r.incl_len);
  ++packets_;
}

std::size_t PcapWriter::packets() const {
  std::lock_guard lock(mu_);
  return packets_;
}

std::vector<std::uint8_t> PcapWriter::contents() const {
  std::lock_guard lock(mu_);
  return mem_;
}

void PcapWriter::flush() {
  std::lock_guard lock(mu_);
  if (file_) file_->flush();
}

std::vector<PcapRecord> read_pcap(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(GlobalHeader)) throw std::runtime_error("pcap: truncated global header");
  GlobalHeader g;
  std::memcpy(&g, bytes.data(), sizeof(g));
  if (g.magic != kPcapMagic) throw std::runtime_error("pcap: bad magic");
  std::vector<PcapRecord> out;
  std::size_t off = sizeof(GlobalHeader);
  while (off < bytes.size()) {
    if (bytes.size() - off < sizeof(RecordHeader)) throw std::runtime_error("pcap: truncated record header");
    RecordHeader r;
    std::memcpy(&r, bytes.data() + off, sizeof(r));
    off += sizeof(r);
    if (bytes.size() - off < r.incl_len) throw std::runtime_error("pcap: truncated record");
    PcapRecord rec;
    rec.time = static_cast<TimeNs>(r.ts_sec) * kNsPerSec + static_cast<TimeNs>(r.ts_usec) * kNsPerUs;
    rec.orig_len = r.orig_len;
    rec.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(off),
                    bytes.begin() + static_cast<std::ptrdiff_t>(off + r.incl_len));
    off += r.incl_len;
    out.push_back(std::move(rec));
  }
  return out;
}

// ---- filter -------------------------------------------------------------

enum class Field { kIpSrc, kIpDst, kIpProto, kIpEcn, kIpLen, kSport, kDport, kPort, kSeq, kAck, kFlags, kWindow, kTcpLen, kFrameLen };
enum class Op { kEq, kNe, kLt, kGt, kLe, kGe, kHas };

struct PacketFilter::Node {
  enum class Kind { kTrue, kOr, kAnd, kNot, kCmp } kind = Kind::kTrue;
  std::shared_ptr<const Node> a, b;
  Field field = Field::kIpSrc;
  Op op = Op::kEq;
  std::uint64_t value = 0;
};

namespace {

using NodeP = std::shared_ptr<const PacketFilter::Node>;

struct Tok {
  enum class T { kWord, kOp, kLParen, kRParen, kEnd } t;
  std::string s;
};

std::vector<Tok> lex(const std::string& in) {
  std::vector<Tok> out;
  std::size_t i = 0;
  while (i < in.size()) {
    const char c = in[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(') {
      out.push_back({Tok::T::kLParen, "("});
      ++i;
    } else if (c == ')') {
      out.push_back({Tok::T::kRParen, ")"});
      ++i;
    } else if (std::string("=!<>&|").find(c) != std::string::npos) {
      std::string op(1, c);
      if (i + 1 < in.size() && std::string("=&|").find(in[i + 1]) != std::string::npos) op += in[i + 1];
      // '|' between flag names stays inside a word; see below
      out.push_back({Tok::T::kOp, op});
      i += op.size();
    } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_') {
      std::size_t j = i;
      while (j < in.size() && (std::isalnum(static_cast<unsigned char>(in[j])) || in[j] == '.' || in[j] == '_' ||
                               (in[j] == '|' && j + 1 < in.size() && in[j + 1] != '|' && j > i)))
        ++j;
      out.push_back({Tok::T::kWord, in.substr(i, j - i)});
      i = j;
    } else {
      throw FilterError(std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Tok::T::kEnd, ""});
  return out;
}

std::optional<Field> field_of(const std::string& s) {
  static const std::pair<const char*, Field> kFields[] = {
      {"ip.src", Field::kIpSrc},   {"ip.dst", Field::kIpDst},     {"ip.proto", Field::kIpProto},
      {"ip.ecn", Field::kIpEcn},   {"ip.len", Field::kIpLen},     {"tcp.sport", Field::kSport},
      {"tcp.dport", Field::kDport}, {"tcp.port", Field::kPort},   {"tcp.seq", Field::kSeq},
      {"tcp.ack", Field::kAck},    {"tcp.flags", Field::kFlags},  {"tcp.window", Field::kWindow},
      {"tcp.len", Field::kTcpLen}, {"frame.len", Field::kFrameLen}};
  for (const auto& [n, f] : kFields)
    if (s == n) return f;
  return std::nullopt;
}

std::uint64_t parse_value(const std::string& s) {
  Ipv4Addr ip;
  if (std::count(s.begin(), s.end(), '.') == 3 && parse_ip(s, ip)) return ip;
  if (!s.empty() && std::isdigit(static_cast<unsigned char>(s[0]))) {
    try {
      std::size_t pos = 0;
      const std::uint64_t v = std::stoull(s, &pos, 0);
      if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw FilterError("bad number '" + s + "'");
  }
  std::uint64_t bits = 0;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = std::min(s.find('|', start), s.size());
    std::string name = s.substr(start, end - start);
    for (auto& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    static const std::pair<const char*, std::uint8_t> kFlags[] = {
        {"FIN", tcpflag::kFin}, {"SYN", tcpflag::kSyn}, {"RST", tcpflag::kRst}, {"PSH", tcpflag::kPsh},
        {"ACK", tcpflag::kAck}, {"URG", tcpflag::kUrg}, {"ECE", tcpflag::kEce}, {"CWR", tcpflag::kCwr}};
    bool found = false;
    for (const auto& [n, b] : kFlags)
      if (name == n) {
        bits |= b;
        found = true;
      }
    if (!found) throw FilterError("unknown value '" + name + "'");
    start = end + 1;
  }
  return bits;
}

class Parser {
 public:
  explicit Parser(std::vector<Tok> toks) : t_(std::move(toks)) {}

  NodeP parse() {
    if (t_[0].t == Tok::T::kEnd) return std::make_shared<PacketFilter::Node>();
    NodeP n = expr();
    if (peek().t != Tok::T::kEnd) throw FilterError("trailing input near '" + peek().s + "'");
    return n;
  }

 private:
  const Tok& peek() const { return t_[i_]; }
  Tok next() { return t_[i_++]; }
  bool word(const char* w) const { return peek().t == Tok::T::kWord && peek().s == w; }
  bool op(const char* o) const { return peek().t == Tok::T::kOp && peek().s == o; }

  static NodeP bin(PacketFilter::Node::Kind k, NodeP a, NodeP b) {
    auto n = std::make_shared<PacketFilter::Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  NodeP expr() {
    NodeP n = term();
    while (word("or") || op("||")) {
      next();
      n = bin(PacketFilter::Node::Kind::kOr, n, term());
    }
    return n;
  }
  NodeP term() {
    NodeP n = factor();
    while (word("and") || op("&&")) {
      next();
      n = bin(PacketFilter::Node::Kind::kAnd, n, factor());
    }
    return n;
  }
  NodeP factor() {
    if (word("not") || op("!")) {
      next();
      return bin(PacketFilter::Node::Kind::kNot, factor(), nullptr);
    }
    if (peek().t == Tok::T::kLParen) {
      next();
      NodeP n = expr();
      if (peek().t != Tok::T::kRParen) throw FilterError("expected ')'");
      next();
      return n;
    }
    if (peek().t != Tok::T::kWord) throw FilterError("expected a field near '" + peek().s + "'");
    const std::string fname = next().s;
    auto f = field_of(fname);
    if (!f) throw FilterError("unknown field '" + fname + "'");
    auto n = std::make_shared<PacketFilter::Node>();
    n->kind = PacketFilter::Node::Kind::kCmp;
    n->field = *f;
    const Tok o = next();
    if (o.t == Tok::T::kWord && o.s == "has") n->op = Op::kHas;
    else if (o.t == Tok::T::kOp && o.s == "==") n->op = Op::kEq;
    else if (o.t == Tok::T::kOp && o.s == "!=") n->op = Op::kNe;
    else if (o.t == Tok::T::kOp && o.s == "<") n->op = Op::kLt;
    else if (o.t == Tok::T::kOp && o.s == ">") n->op = Op::kGt;
    else if (o.t == Tok::T::kOp && o.s == "<=") n->op = Op::kLe;
    else if (o.t == Tok::T::kOp && o.s == ">=") n->op = Op::kGe;
    else throw FilterError("expected an operator after '" + fname + "'");
    if (peek().t != Tok::T::kWord) throw FilterError("expected a value after '" + o.s + "'");
    n->value = parse_value(next().s);
    return n;
  }

  std::vector<Tok> t_;
  std::size_t i_ = 0;
};

bool compare(std::uint64_t lhs, Op op, std::uint64_t rhs) {
  switch (op) {
    case Op::kEq: return lhs == rhs;
    case Op::kNe: return lhs != rhs;
    case Op::kLt: return lhs < rhs;
    case Op::kGt: return lhs > rhs;
    case Op::kLe: return lhs <= rhs;
    case Op::kGe: return lhs >= rhs;
    case Op::kHas: return (lhs & rhs) == rhs;
  }
  return false;
}

bool eval(const PacketFilter::Node& n, const std::optional<SegmentView>& seg, std::size_t frame_len) {
  using K = PacketFilter::Node::Kind;
  switch (n.kind) {
    case K::kTrue: return true;
    case K::kOr: return eval(*n.a, seg, frame_len) || eval(*n.b, seg, frame_len);
    case K::kAnd: return eval(*n.a, seg, frame_len) && eval(*n.b, seg, frame_len);
    case K::kNot: return !eval(*n.a, seg, frame_len);
    case K::kCmp: break;
  }
  if (n.field == Field::kFrameLen) return compare(frame_len, n.op, n.value);
  if (!seg) return false;
  const SegmentView& s = *seg;
  switch (n.field) {
    case Field::kIpSrc: return compare(s.ip.src, n.op, n.value);
    case Field::kIpDst: return compare(s.ip.dst, n.op, n.value);
    case Field::kIpProto: return compare(s.ip.protocol, n.op, n.value);
    case Field::kIpEcn: return compare(static_cast<std::uint64_t>(s.ip.ecn()), n.op, n.value);
    case Field::kIpLen: return compare(s.ip.total_length, n.op, n.value);
    case Field::kSport: return compare(s.tcp.src_port, n.op, n.value);
    case Field::kDport: return compare(s.tcp.dst_port, n.op, n.value);
    case Field::kPort: return compare(s.tcp.src_port, n.op, n.value) || compare(s.tcp.dst_port, n.op, n.value);
    case Field::kSeq: return compare(s.tcp.seq, n.op, n.value);
    case Field::kAck: return compare(s.tcp.ack, n.op, n.value);
    case Field::kFlags: return compare(s.tcp.flags, n.op, n.value);
    case Field::kWindow: return compare(s.tcp.window, n.op, n.value);
    case Field::kTcpLen: return compare(s.payload.size(), n.op, n.value);
    case Field::kFrameLen: break;
  }
  return false;
}

}  // namespace

PacketFilter::PacketFilter() : root_(std::make_shared<Node>()) {}

PacketFilter PacketFilter::parse(const std::string& expr) {
  PacketFilter f;
  f.root_ = Parser(lex(expr)).parse();
  f.text_ = expr;
  return f;
}

bool PacketFilter::matches(std::span<const std::uint8_t> frame) const {
  return eval(*root_, parse_segment(frame), frame.size());
}

}  // namespace tcpipe
