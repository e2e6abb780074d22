#pragma once

#include "sdfedit/service/service.hpp"

namespace httplib {
class Server;
}

namespace sdfedit::service {

/// Routes every GET, POST and OPTIONS request of `server` to `service`,
/// which must outlive the server.
void mount(httplib::Server& server, const EditService& service);

}  // namespace sdfedit::service
