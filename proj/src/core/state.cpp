#include "tcpipe/core/state.hpp"

#include <sstream>
#include <stdexcept>

#include "tcpipe/core/seq.hpp"

namespace tcpipe {

namespace {

class BitWriter {
 public:
  void put(std::uint64_t value, unsigned bits) {
    for (unsigned i = 0; i < bits; ++i, ++pos_) {
      if (pos_ / 8 >= out_.size()) out_.push_back(0);
      if ((value >> i) & 1) out_[pos_ / 8] |= static_cast<std::uint8_t>(1u << (pos_ % 8));
    }
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
  std::size_t pos_ = 0;
};

class BitReader {
 public:
  explicit BitReader(const std::vector<std::uint8_t>& in) : in_(in) {}
  std::uint64_t get(unsigned bits) {
    std::uint64_t v = 0;
    for (unsigned i = 0; i < bits; ++i, ++pos_) {
      if (pos_ / 8 >= in_.size()) throw std::out_of_range("packed state truncated");
      if ((in_[pos_ / 8] >> (pos_ % 8)) & 1) v |= std::uint64_t{1} << i;
    }
    return v;
  }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

std::uint64_t mac_bits(const MacAddr& m) {
  std::uint64_t v = 0;
  for (std::uint8_t b : m) v = (v << 8) | b;
  return v;
}

MacAddr mac_from_bits(std::uint64_t v) {
  MacAddr m;
  for (int i = 5; i >= 0; --i) {
    m[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v);
    v >>= 8;
  }
  return m;
}

}  // namespace

std::vector<std::uint8_t> pack(const PreState& s) {
  if (s.flow_group > 3) throw std::invalid_argument("flow_group does not fit 2 bits");
  BitWriter w;
  w.put(mac_bits(s.peer_mac), 48);
  w.put(s.peer_ip, 32);
  w.put(s.local_port, 16);
  w.put(s.remote_port, 16);
  w.put(s.flow_group, 2);
  return w.take();
}

std::vector<std::uint8_t> pack(const ProtoState& s) {
  BitWriter w;
  w.put(s.rx_pos, 32);
  w.put(s.tx_pos, 32);
  w.put(s.tx_avail, 32);
  w.put(s.rx_avail, 32);
  w.put(s.remote_win, 16);
  w.put(s.tx_sent, 32);
  w.put(s.seq, 32);
  w.put(s.ack, 32);
  w.put(s.ooo_start, 32);
  w.put(s.ooo_len, 32);
  w.put(s.dupack_cnt, 4);
  w.put(s.next_ts, 32);
  return w.take();
}

std::vector<std::uint8_t> pack(const PostState& s) {
  BitWriter w;
  w.put(s.opaque, 64);
  w.put(s.context, 16);
  w.put(s.rx_base, 64);
  w.put(s.tx_base, 64);
  w.put(s.rx_size, 32);
  w.put(s.tx_size, 32);
  w.put(s.cnt_ackb, 32);
  w.put(s.cnt_ecnb, 32);
  w.put(s.cnt_fretx, 8);
  w.put(s.rtt_est, 32);
  w.put(s.rate, 32);
  return w.take();
}

PreState unpack_pre(const std::vector<std::uint8_t>& bytes) {
  BitReader r(bytes);
  PreState s;
  s.peer_mac = mac_from_bits(r.get(48));
  s.peer_ip = static_cast<Ipv4Addr>(r.get(32));
  s.local_port = static_cast<std::uint16_t>(r.get(16));
  s.remote_port = static_cast<std::uint16_t>(r.get(16));
  s.flow_group = static_cast<std::uint32_t>(r.get(2));
  return s;
}

ProtoState unpack_proto(const std::vector<std::uint8_t>& bytes) {
  BitReader r(bytes);
  ProtoState s;
  s.rx_pos = static_cast<std::uint32_t>(r.get(32));
  s.tx_pos = static_cast<std::uint32_t>(r.get(32));
  s.tx_avail = static_cast<std::uint32_t>(r.get(32));
  s.rx_avail = static_cast<std::uint32_t>(r.get(32));
  s.remote_win = static_cast<std::uint16_t>(r.get(16));
  s.tx_sent = static_cast<std::uint32_t>(r.get(32));
  s.seq = static_cast<std::uint32_t>(r.get(32));
  s.ack = static_cast<std::uint32_t>(r.get(32));
  s.ooo_start = static_cast<std::uint32_t>(r.get(32));
  s.ooo_len = static_cast<std::uint32_t>(r.get(32));
  s.dupack_cnt = static_cast<std::uint8_t>(r.get(4));
  s.next_ts = static_cast<std::uint32_t>(r.get(32));
  return s;
}

PostState unpack_post(const std::vector<std::uint8_t>& bytes) {
  BitReader r(bytes);
  PostState s;
  s.opaque = r.get(64);
  s.context = static_cast<std::uint16_t>(r.get(16));
  s.rx_base = r.get(64);
  s.tx_base = r.get(64);
  s.rx_size = static_cast<std::uint32_t>(r.get(32));
  s.tx_size = static_cast<std::uint32_t>(r.get(32));
  s.cnt_ackb = static_cast<std::uint32_t>(r.get(32));
  s.cnt_ecnb = static_cast<std::uint32_t>(r.get(32));
  s.cnt_fretx = static_cast<std::uint8_t>(r.get(8));
  s.rtt_est = static_cast<std::uint32_t>(r.get(32));
  s.rate = static_cast<std::uint32_t>(r.get(32));
  return s;
}

std::optional<std::string> check_invariants(const ProtoState& st, const ProtoFlags& flags,
                                            std::uint32_t tx_size, std::uint32_t rx_size) {
  if (st.ooo_len != 0 && !seq_gt(st.ooo_start, st.ack)) return "ooo interval not above ack";
  if (st.ooo_len != 0 &&
      static_cast<std::uint64_t>(st.ooo_start - st.ack) + st.ooo_len > st.rx_avail)
    return "ooo interval exceeds receive window";
  if (std::uint64_t{st.tx_avail} + st.tx_sent > tx_size) return "tx_avail + tx_sent > tx_size";
  if (st.rx_avail > rx_size) return "rx_avail > rx_size";
  if (st.dupack_cnt > 15) return "dupack_cnt exceeds 4 bits";
  if (flags.fin_sent && !flags.fin_pending) return "fin_sent without fin_pending";
  if (flags.fin_acked && !flags.fin_sent) return "fin_acked without fin_sent";
  return std::nullopt;
}

std::string describe(const ProtoState& st) {
  std::ostringstream os;
  os << "{rx_pos=" << st.rx_pos << " tx_pos=" << st.tx_pos << " tx_avail=" << st.tx_avail
     << " rx_avail=" << st.rx_avail << " remote_win=" << st.remote_win
     << " tx_sent=" << st.tx_sent << " seq=" << st.seq << " ack=" << st.ack
     << " ooo=[" << st.ooo_start << "+" << st.ooo_len << "] dupack=" << int{st.dupack_cnt}
     << " next_ts=" << st.next_ts << "}";
  return os.str();
}

}  // namespace tcpipe
