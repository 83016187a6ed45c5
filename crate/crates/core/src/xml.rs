//! Path-tracking event walk over an XML document.

use quick_xml::events::Event;
use quick_xml::Reader;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("XML error at /{path}: {message}")]
pub struct XmlError {
    /// Slash-separated element path where the problem was found.
    pub path: String,
    pub message: String,
}

pub(crate) enum Node<'a> {
    Open,
    Text(&'a str),
    Close,
}

/// Calls `f` with the current element stack for every start tag, text run
/// and end tag. For `Close`, the closing element is still on the stack.
pub(crate) fn walk<F>(xml: &str, mut f: F) -> Result<(), XmlError>
where
    F: FnMut(&[String], Node<'_>) -> Result<(), String>,
{
    let mut reader = Reader::from_str(xml);
    reader.config_mut().check_end_names = true;
    let mut stack: Vec<String> = Vec::new();
    let at = |stack: &[String], message: String| XmlError {
        path: stack.join("/"),
        message,
    };
    loop {
        match reader.read_event() {
            Ok(Event::Start(e)) => {
                stack.push(String::from_utf8_lossy(e.name().as_ref()).into_owned());
                f(&stack, Node::Open).map_err(|m| at(&stack, m))?;
            }
            Ok(Event::Empty(e)) => {
                stack.push(String::from_utf8_lossy(e.name().as_ref()).into_owned());
                f(&stack, Node::Open).map_err(|m| at(&stack, m))?;
                f(&stack, Node::Close).map_err(|m| at(&stack, m))?;
                stack.pop();
            }
            Ok(Event::End(_)) => {
                f(&stack, Node::Close).map_err(|m| at(&stack, m))?;
                stack.pop();
            }
            Ok(Event::Text(t)) => {
                let text = t.unescape().map_err(|e| at(&stack, e.to_string()))?;
                f(&stack, Node::Text(&text)).map_err(|m| at(&stack, m))?;
            }
            Ok(Event::CData(c)) => {
                let raw = c.into_inner();
                let text = String::from_utf8_lossy(&raw);
                f(&stack, Node::Text(&text)).map_err(|m| at(&stack, m))?;
            }
            Ok(Event::Eof) => {
                if !stack.is_empty() {
                    return Err(at(&stack, format!("document truncated inside <{}>", stack.last().unwrap())));
                }
                return Ok(());
            }
            Ok(_) => {}
            Err(e) => return Err(at(&stack, e.to_string())),
        }
    }
}

/// True when the element stack ends with the given names.
pub(crate) fn ends_with(stack: &[String], suffix: &[&str]) -> bool {
    stack.len() >= suffix.len()
        && stack[stack.len() - suffix.len()..]
            .iter()
            .zip(suffix)
            .all(|(a, b)| a == b)
}

/// Collapses whitespace runs to single spaces and trims.
pub(crate) fn squash(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
