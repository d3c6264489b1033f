use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Value};

use curriculum::book::{BookError, EditRejection};
use curriculum::graph::{ClosureError, GraphError, ValidationReport};
use curriculum::ingest::{IngestError, ParseErrors};
use curriculum::interop::InteropError;
use curriculum::sequencing::{OrderCheck, SequencingError};

/// Error response: a status plus a JSON body `{code, message, ...details}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub details: Value,
}

pub type ApiResult<T> = Result<T, ApiError>;

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_owned(),
            message: message.into(),
            details: Value::Null,
        }
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn conflict(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", message)
    }

    pub fn with(mut self, key: &str, value: impl serde::Serialize) -> Self {
        if !self.details.is_object() {
            self.details = json!({});
        }
        self.details[key] = serde_json::to_value(value).unwrap_or(Value::Null);
        self
    }

    /// 400 carrying a validation report; the code is the first error's.
    pub fn invalid(report: &ValidationReport) -> Self {
        let code = report.errors.first().map(|f| f.code.as_str()).unwrap_or("INVALID_GRAPH");
        Self::bad_request(code, format!("graph has {} validation error(s)", report.errors.len())).with("report", report)
    }

    pub fn syntax(errors: &ParseErrors) -> Self {
        let list: Vec<Value> = errors
            .0
            .iter()
            .map(|e| json!({"line": e.line, "column": e.column, "message": e.message}))
            .collect();
        Self::bad_request("SYNTAX", errors.to_string()).with("errors", list)
    }

    pub fn order(check: &OrderCheck) -> Self {
        match check {
            OrderCheck::ViolatedEdge { edge } => {
                Self::conflict("VIOLATED_EDGE", format!("order teaches {} before {}", edge.head, edge.tail)).with("edge", edge)
            }
            other => Self::conflict("NOT_A_PERMUTATION", "order does not list the closure exactly once").with("check", other),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({"code": self.code, "message": self.message});
        if let Value::Object(extra) = self.details {
            for (k, v) in extra {
                body[k] = v;
            }
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<ClosureError> for ApiError {
    fn from(e: ClosureError) -> Self {
        let msg = e.to_string();
        match e {
            ClosureError::Unresolved(points) => Self::conflict("UNRESOLVED_GROUP", msg).with("choice_points", points),
            ClosureError::UnknownTarget(n) => Self::bad_request("UNKNOWN_NODE", msg).with("node", n),
            ClosureError::UnknownGroup(g) => Self::bad_request("UNKNOWN_GROUP", msg).with("group", g),
            ClosureError::NotAMember { .. } => Self::bad_request("NOT_A_MEMBER", msg),
            ClosureError::EmptyTargets => Self::bad_request("EMPTY_TARGETS", msg),
            ClosureError::ZeroCap => Self::bad_request("ZERO_CAP", msg),
        }
    }
}

impl From<SequencingError> for ApiError {
    fn from(e: SequencingError) -> Self {
        let code = match e {
            SequencingError::Corrupt(_) => "CORRUPT_CLOSURE",
            SequencingError::ZeroCap => "ZERO_CAP",
            SequencingError::InvalidWeights => "INVALID_WEIGHTS",
            SequencingError::UnknownNode(_) => "UNKNOWN_NODE",
        };
        Self::bad_request(code, e.to_string())
    }
}

impl From<BookError> for ApiError {
    fn from(e: BookError) -> Self {
        let msg = e.to_string();
        match e {
            BookError::OrderMismatch(check) => Self::order(&check),
            BookError::MissingContent(tokens) => Self::bad_request("MISSING_CONTENT", msg).with("tokens", tokens),
            BookError::UnknownNode { .. } | BookError::UnknownGraphNode(_) => Self::bad_request("UNKNOWN_NODE", msg),
            BookError::InvalidExercise { .. } => Self::bad_request("INVALID_EXERCISE", msg),
            BookError::DuplicateExercise(_) => Self::bad_request("DUPLICATE_EXERCISE", msg),
            BookError::TargetMastered(n) => Self::conflict("TARGET_MASTERED", msg).with("node", n),
            BookError::TargetNotGap { node, .. } => Self::conflict("TARGET_NOT_GAP", msg).with("node", node),
            BookError::Closure(c) => c.into(),
            BookError::Sequencing(s) => s.into(),
        }
    }
}

impl From<EditRejection> for ApiError {
    fn from(e: EditRejection) -> Self {
        let msg = e.to_string();
        let detail = serde_json::to_value(&e).unwrap_or(Value::Null);
        let code = detail["code"].as_str().unwrap_or("EDIT_REJECTED").to_owned();
        let status = match e {
            EditRejection::UnknownNode { .. } | EditRejection::PositionOutOfRange { .. } => StatusCode::BAD_REQUEST,
            _ => StatusCode::CONFLICT,
        };
        let mut err = Self::new(status, &code, msg);
        err.details = detail;
        err
    }
}

impl From<GraphError> for ApiError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Invalid(report) => Self::invalid(&report),
            GraphError::UnknownNode(n) => Self::not_found("UNKNOWN_NODE", format!("unknown node {n}")),
        }
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Parse(errs) => Self::syntax(&errs),
            IngestError::Invalid(report) => Self::invalid(&report),
            IngestError::Io { .. } | IngestError::MissingFiles(_) => Self::internal(e.to_string()),
            IngestError::Book(b) => b.into(),
            other => Self::bad_request("IMPORT_FAILED", other.to_string()),
        }
    }
}

impl From<InteropError> for ApiError {
    fn from(e: InteropError) -> Self {
        let msg = e.to_string();
        let code = e.code();
        match e {
            InteropError::Cycle(witness) => Self::conflict(code, msg).with("cycle", witness),
            InteropError::NoMatch(unknown) => Self::not_found(code, msg).with("unknown_tags", unknown),
            InteropError::Closure(c) => c.into(),
            InteropError::Book(b) => b.into(),
            InteropError::Parse(p) => Self::syntax(&p),
            InteropError::InvalidInput { report, .. } | InteropError::Invalid(report) => Self::invalid(&report),
            _ => Self::bad_request(code, msg),
        }
    }
}
