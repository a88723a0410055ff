//! User-prompt layouts. The system prompt carries the instructions; the
//! user prompt carries the question and the evidence.

use crate::retrieval::Context;

pub fn render_context(context: &Context) -> String {
    let mut out = String::from("Context:\n");
    if context.documents.is_empty() {
        out.push_str("(no documents retrieved)\n");
    }
    for (i, doc) in context.documents.iter().enumerate() {
        out.push_str(&format!("[{}] {}\n", i + 1, doc.text.trim()));
    }
    if !context.relations.is_empty() {
        out.push_str("\nKey relationships:\n");
        for r in &context.relations {
            out.push_str(&format!("- {}\n", r.text));
        }
    }
    out
}

pub fn answering_input(question: &str, context: &Context) -> String {
    format!("Question: {question}\n\n{}", render_context(context))
}

pub fn reasoning_input(question: &str, memory: &str, context: &Context) -> String {
    let mut out = format!("Question: {question}\n\n");
    if !memory.trim().is_empty() {
        out.push_str(&format!(
            "Previously gathered information:\n{}\n\n",
            memory.trim()
        ));
    }
    out.push_str(&render_context(context));
    out
}

/// Subquestion/answer pairs rendered as lines, oldest first.
pub fn qa_pairs(pairs: &[(String, String)]) -> String {
    pairs
        .iter()
        .map(|(q, a)| format!("Q: {q}\nA: {a}\n"))
        .collect()
}
