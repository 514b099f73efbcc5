//! Gate diagnostics with stable codes.

use std::fmt;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        })
    }
}

macro_rules! codes {
    ($( $variant:ident => $code:literal, $cond:literal; )*) => {
        /// Stable diagnostic identifiers.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum Code { $( $variant, )* }

        impl Code {
            pub const ALL: &'static [Code] = &[ $( Code::$variant, )* ];

            pub fn as_str(self) -> &'static str {
                match self { $( Code::$variant => $code, )* }
            }

            /// Name of the side condition the diagnostic reports on.
            pub fn condition(self) -> &'static str {
                match self { $( Code::$variant => $cond, )* }
            }
        }
    };
}

codes! {
    Parse => "E0001", "concrete-syntax";
    Unbound => "E0002", "concrete-syntax";
    Duplicate => "E0003", "concrete-syntax";
    TypeError => "E0100", "typing-rules";
    SymbolType => "E0101", "symbol-typing";
    PrecedenceCycle => "E0102", "precedence";
    RuleFormat => "E0200", "rewrite-rule-format";
    RuleEnv => "E0201", "well-typed-rules";
    RuleType => "E0202", "well-typed-rules";
    RuleRho => "E0203", "well-typed-rules";
    Accessibility => "E0204", "accessibility";
    NonDuplicating => "E0205", "first-order-data-types";
    ConstantHasRules => "E0206", "rewrite-rule-format";
    Kappa => "E0300", "predicate-rules";
    PredicateOverlap => "E0301", "predicate-rules";
    Monotonicity => "E0302", "monotone-arguments";
    MonDeclaration => "E0303", "monotone-arguments";
    Confluence => "E0304", "confluence";
    CriticalPair => "I0305", "critical-pairs";
    NotStrictlyPositive => "E0400", "strict-positivity";
    NotSmall => "E0401", "smallness";
    Unsafe => "E0402", "safeness";
    I6 => "E0403", "condition-i6";
    InductiveShape => "E0404", "inductive-declaration";
    PreRecursor => "E0500", "pre-recursor";
    RecursorPositivity => "E0501", "recursor-positivity";
    NonCanonicalRecursor => "E0502", "recursor-admissibility";
    TrustedRecursor => "W0503", "recursor-admissibility";
    RecursorDuplicate => "E0504", "recursor-admissibility";
    NoDecrease => "E0505", "structural-decrease";
    FuelExhausted => "E0600", "fuel";
    CicType => "E0700", "cic-typing";
    CicInductive => "E0701", "cic-inductive";
    CicElim => "E0702", "cic-elimination";
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Code {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: Code,
    pub severity: Severity,
    pub symbol: Option<String>,
    pub rule: Option<String>,
    pub position: Option<String>,
    /// The violated side condition; the key name is part of the JSON format.
    #[serde(rename = "paper_pointer")]
    pub condition: &'static str,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: Code, severity: Severity, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            code,
            severity,
            symbol: None,
            rule: None,
            position: None,
            condition: code.condition(),
            message: message.into(),
        }
    }
    pub fn error(code: Code, message: impl Into<String>) -> Diagnostic {
        Diagnostic::new(code, Severity::Error, message)
    }
    pub fn warning(code: Code, message: impl Into<String>) -> Diagnostic {
        Diagnostic::new(code, Severity::Warning, message)
    }
    pub fn info(code: Code, message: impl Into<String>) -> Diagnostic {
        Diagnostic::new(code, Severity::Info, message)
    }
    pub fn symbol(mut self, f: &str) -> Diagnostic {
        self.symbol = Some(f.to_string());
        self
    }
    pub fn rule(mut self, r: &str) -> Diagnostic {
        self.rule = Some(r.to_string());
        self
    }
    pub fn at(mut self, p: impl fmt::Display) -> Diagnostic {
        self.position = Some(p.to_string());
        self
    }
    pub fn with_severity(mut self, s: Severity) -> Diagnostic {
        self.severity = s;
        self
    }
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.severity, self.code)?;
        if let Some(s) = &self.symbol {
            write!(f, " symbol {s}")?;
        }
        if let Some(r) = &self.rule {
            write!(f, " rule {r}")?;
        }
        if let Some(p) = &self.position {
            write!(f, " at {p}")?;
        }
        write!(f, ": {} ({})", self.message, self.condition)
    }
}
