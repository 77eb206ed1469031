#include "beac/serve.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <deque>

#include "beac/teleop.hpp"

namespace beac::app {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, const ServeOptions& options)
      : ws_(std::move(socket)),
        timer_(ws_.get_executor()),
        period_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / options.tick_hz))),
        session_(options.env, options.dataset, options.reveal_object, options.seed) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->open_ = true;
      self->send(self->session_.view().dump());
      self->read();
      self->schedule_tick();
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->close();
        return;
      }
      const auto text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      auto reply = self->session_.handle_text(text);
      if (!reply.is_null()) self->send(reply.dump());
      self->read();
    });
  }

  void schedule_tick() {
    timer_.expires_after(period_);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || !self->open_) return;
      self->send(self->session_.tick().dump());
      self->schedule_tick();
    });
  }

  void send(std::string text) {
    if (!open_) return;
    outbox_.push_back(std::move(text));
    if (outbox_.size() == 1) write_next();
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(asio::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->close();
        return;
      }
      self->outbox_.pop_front();
      if (!self->outbox_.empty()) self->write_next();
    });
  }

  void close() {
    open_ = false;
    timer_.cancel();
  }

  websocket::stream<beast::tcp_stream> ws_;
  asio::steady_timer timer_;
  std::chrono::steady_clock::duration period_;
  TeleopSession session_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  bool open_ = false;
};

}  // namespace

struct TeleopServer::Impl {
  explicit Impl(ServeOptions opts) : options(std::move(opts)), acceptor(io) {
    if (!(options.tick_hz > 0.0)) throw std::invalid_argument("serve tick rate must be > 0");
    options.env.validate();
    tcp::endpoint endpoint(asio::ip::make_address(options.address), options.port);
    acceptor.open(endpoint.protocol());
    acceptor.set_option(asio::socket_base::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen();
  }

  void accept() {
    acceptor.async_accept(asio::make_strand(io), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Connection>(std::move(socket), options)->start();
      accept();
    });
  }

  ServeOptions options;
  asio::io_context io;
  tcp::acceptor acceptor;
};

TeleopServer::TeleopServer(ServeOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}
TeleopServer::~TeleopServer() = default;

std::uint16_t TeleopServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void TeleopServer::run() {
  impl_->accept();
  impl_->io.run();
}

void TeleopServer::stop() {
  asio::post(impl_->io, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
    impl_->io.stop();
  });
}

}  // namespace beac::app
