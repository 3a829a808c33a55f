"""Out-of-process tool modules speaking a length-prefixed framed RPC protocol."""

from .wire import (  # noqa: F401
    PROTOCOL_VERSION,
    FunctionDoc,
    Request,
    Response,
    decode_frame,
    encode_frame,
    read_frame,
    write_frame,
)
from .client import (  # noqa: F401
    ModuleClient,
    ModuleDescriptor,
    ModuleError,
    ModuleRegistry,
    recommend,
)
