"""Prompt templates for the text-generation, reordering and routing model calls.

Templates are fixed strings with ``{slot}`` placeholders filled by plain string
replacement (several templates contain literal JSON braces, so ``str.format``
is not used). Keeping the bytes stable matters: transcript replay keys are
content hashes of the assembled prompt.
"""

from __future__ import annotations

TEMPORAL_INSTRUCTION_PROMPT = """\
You are an expert in Vision-and-Language Navigation (VLN) and Language.

<Task>
Your task is to write natural, human-like navigation instructions based on a sequence of visual observations from an indoor environment.

<Instruction Guidelines>
- Do not use explicit temporal markers like "then", "next", "before", or "after".
- Imply sequence using spatial or contextual phrasing instead.
- Include only essential visual cues, such as layout, furniture, doorways, or notable landmarks that help clarify the path.
- Avoid over-descriptive or decorative language (e.g., "intricate stonework", "high ceiling").
- Keep the instruction fluent, intuitive, and helpful, like someone casually guiding a friend through a space.
- Keep it concise and comparable in length to a temporal-based instruction.

<Visual Reasoning Process>
Analyze each frame in the visual sequence. Focus on:
- Movement across spaces
- Transitions (e.g., turns, room entries)
- Orientation shifts
- Key visible cues needed to navigate the path

<Instruction Output>
Once you've analyzed the path:
- Write a fluent, natural-sounding instruction describing the full trajectory.
- Do **not** include reasoning steps.
- Output **only** the final instruction.

<Example Chain-of-Thought>
- 1st Frame:
    - The agent is inside a narrow wooden hallway-like space.
    - The doorway directly ahead leads to a brighter area.

- 2nd Frame:
    - The agent is almost at the threshold of the doorway.
    - You can see the hallway plant and the open area outside.

- 3rd Frame:
    - The agent is now fully outside the room, looking into a wide open space.
    - There's a visible bedroom to the left, and the plant in the yellow pot is to the right, indicating the agent has made a hard left turn.

- 4th Frame:
    - The agent is now facing a doorway to a bedroom on the left side.
    - The bed is partially visible inside.

- 5th Frame:
    - The agent has entered the room and is facing a window.
    - The position suggests the agent took one step inside and then stopped.

---

<Trajectory Images>
"{path_images}"
"""

ATOMIC_INSTRUCTION_PROMPT = """\
You are an expert in Vision-and-Language Navigation (VLN) and Language.

<Task>
- Generate a **single** natural-language instruction that guides an agent through the scene.

<Input>
- A visual sequence (an ordered list of images)
- A specific navigation skill to emphasize

<Requirements>
- The instruction should describe what the agent does across the image sequence (e.g., move, climb, pause).
- Ground the instruction in **visible cues**, such as layout, objects, stairs, doorways, lighting, or orientation.
- Emphasize the given **target skill** (e.g., "Direction Adjustment", "Vertical Movement", etc.), while naturally incorporating other relevant details as needed.
- The output must be a **single sentence**, written in fluent, natural language (no lists, quotes, or symbols).
- Instruction length should be **20-30 words** (aim for ~25).
- Do **not** include explanations, reasoning steps, or metadata output only the instruction itself.

<Available Skills>
{Direction Adjustment, Vertical Movement, Stop and Pause, Landmark Detection, Area and Region Identification}

<Skill Definitions>
- **Direction Adjustment**: Involves turning or changing heading. Look for instructions like "turn left", "go back", or "face the hallway". Used when the agent needs to rotate or reorient without necessarily changing position.

- **Vertical Movement**: Involves moving across floors or elevation changes. Triggered by terms like "go upstairs", "down the stairs", or "take the elevator". Watch for floor changes in visuals or references to vertical navigation.

- **Stop and Pause**: Involves coming to a full stop at a defined point. Use lighter-weight verbs such as pause, wait, and stand, when the stop happens in the middle of sequence (e.g., "pause by the red sofa"). Use stronger, more terminal verbs like stop and come to a stop for the final action or true endpoint (e.g., "stop at the glass doors"). This distinction helps the agent decide whether to hold briefly or end its navigation.

- **Landmark Detection**: Requires identifying and responding to specific objects or features in the environment. Triggered by mentions of visible items like "lamp", "chair", "red sofa", "painting". Used when object recognition is necessary to proceed or confirm position.

- **Area and Region Identification**: Involves recognizing or transitioning between distinct spaces or rooms. Triggered by mentions like "enter the kitchen", "in the bedroom", "exit hallway". Requires understanding of semantic regions based on context or appearance.


<Output Format>
Return only the instruction sentence. Do not include tags, labels, or formatting.

---

<Trajectory Images>
"{path_images}"

<Focused Skill>
"{skill_name}"
"""

REORDER_PROMPT = """\
You are an expert at converting natural language navigation instructions into detailed, logically ordered sub-instructions for agents.

<Task>
- Break down instructions into a sequence of minimal, goal-directed steps.
- Make all implicit temporal or spatial relationships explicit.
- Preserve execution order by reconstructing intermediate actions that are implied, not directly stated.

<Logic Rules>
- (A) --> [after / then / once / as soon as] --> (B): Do A fully, then B.
- (B) --> [before] --> (A): Move toward A, then perform B at a point prior.
- (A) --> [until] --> (B): Continue A until B is reached.
- Avoid "then", "before", "until", "once" etc. in the output.

<Formatting Rules>
- Single sentence, steps separated by periods.
- Each step must be minimal, concrete, and goal-focused.

<Examples>
**Example 1:**
Instruction: "Turn around and walk down the stairs. Stop once you get down them."
Output:
Turn around. Walk down the stairs. Stop at the bottom of the stairs.

**Example 2:**
Instruction: "Walk toward the dining room but turn left before entering it and go into the open area."
Output:
Walk toward the dining room. Stop at the entrance. Turn left. Enter the open area.

**Example 3:**
Instruction: "After you leave the laundry room, make a left in the hallway, and go to the bedroom straight ahead. When you are in the doorway of the room go to the doorway of the closet on the left and wait."
Output:
Exit the laundry room. Turn left in the hallway. Walk to the bedroom straight ahead. Enter the doorway of the bedroom. Go to the doorway of the closet on the left. Wait there.

**Example 4:**
Instruction: "Start moving forward down the corridor. You will pass offices on your left and right. Keep going down the hallway until you get to an exit sign on your right and what looks like some lockers in front of you. There will also be a brown door with an exit sign above it in front of you."
Output:
Start moving forward down the corridor. Pass the offices on your left and right. Continue walking down the hallway. Reach the exit sign on your right and the lockers in front of you. Stop in front of the brown door with the exit sign above it.

---

<Original Instruction>:
"{instruction}"
"""

LOCALIZER_PROMPT = """\
You are a visual reasoning assistant for indoor navigation.
<Task>:
Your task is to analyze a list of previously observed images and a natural language instruction.
Determine which parts of the instruction have already been completed, and return the next step to be executed.
<Response Rules>
Your response must:
- Return the next action using *exact phrasing* from the reordered instruction (no paraphrasing).
- Match the sub-instruction to the visual context from previous images.
- If the goal (e.g., pool table) has clearly been reached, return the final sub-instruction.
- If *all* sub-instructions have been completed based on the visual path, do not return anything further. Stop reasoning.
- If the final destination has been reached and the last step is a positional or waiting action (e.g., "wait there", "step to the left"), return that as the next step.
- You must reason about whether the agent is already at the destination.
- If the current image shows the goal destination (e.g., inside the room with the pool table, or inside the open doorway), and the instruction contains a final step like "wait" or "adjust your position", that is the next sub-instruction.
---
Use the following reasoning strategy to determine what to do next:
<Step-by-Step Reasoning Instructions>:
1. Decompose the instruction into sub-instructions.
- Break the full instruction into smaller steps. Each sentence or clause typically represents one step.
- Example:
    - Original: "At the bottom of the stairs, go through the nearest archway to your left. Head straight until you enter the room with a pool table. Step slightly to the left to get out of the way."
    - Decomposed:
        - "At the bottom of the stairs, go through the nearest archway to your left."
        - "Head straight until you enter the room with a pool table."
        - "Step slightly to the left to get out of the way."
2. Use the previous sub-instruction list to identify completed steps.
- Do not reissue any previously executed sub-instructions.
- Compare upcoming steps against what may have been visually completed, even if not explicitly executed one-by-one.
3. Analyze the sequence of previous viewpoint images.
- Use visual context to infer if *multiple* sub-instructions have been completed in a single transition.
- If image progression clearly shows the agent has already bypassed an intermediate area or reached a later goal, mark those steps as implicitly complete.
4. Evaluate remaining sub-instructions for completion.
- If the current image shows the agent at or beyond the target of a sub-instruction, that step can be considered completed.
- If the current image shows the agent inside the goal location and only a final positional instruction remains (e.g., "Step slightly to the left"), return that final instruction.
5. Select the next uncompleted sub-instruction that is visually and contextually justified.
- Use exact wording from the original instruction.
- Do not return instructions that the agent already visually fulfilled, even if they were skipped.
6. Output the result in the following JSON format:
{
"Sub-instruction to be executed": "<exact next instruction clause>",
"Reasoning": "<why this is the next step based on image sequence>"
}
CHECKPOINT:
If multiple sub-instructions were completed based on a single or continuous image segment, skip them and jump to the next logical, visually unfulfilled step.
---

Now, using the instruction and the visual history, identify the next step.
IMPORTANT: Your response must be a valid JSON object without any surrounding text, code blocks, or explanations.
Do not include markdown formatting like ```json or ```.

<Original Whole Instruction>:
"{instruction}"
<Previous Sub-Instructions>:
"{previous_sub_instructions}"
<Previous Viewpoint Images>:
{viewpoint_summaries}
"""

SKILL_ROUTER_PROMPT = """\
You are a visual reasoning assistant for indoor navigation.

<Available Skills>:
["Direction Adjustment", "Vertical Movement", "Stop and Pause", "Landmark Detection", "Area and Region Identification"]

<Skills Explanation>:
- Direction Adjustment:
Involves turning or changing heading. Look for instructions like "turn left", "go back", or "face the hallway". Used when the agent needs to rotate or reorient without necessarily changing position.
- Vertical Movement:
Involves moving across floors or elevation changes. Triggered by terms like "go upstairs", "down the stairs", or "take the elevator". Watch for floor changes in visuals or references to vertical navigation.
- Stop and Pause:
Involves stopping at a specific location. Triggered by instructions like "stop", "wait", or "stand in front of". Used when the endpoint or a mid-action pause is important.
- Landmark Detection:
Requires identifying and responding to specific objects or features in the environment. Triggered by mentions of visible items like "lamp", "chair", "red sofa", "painting". Used when object recognition is necessary to proceed or confirm position.
- Area and Region Identification:
Involves recognizing or transitioning between distinct spaces or rooms. Triggered by mentions like "enter the kitchen", "in the bedroom", "exit hallway". Requires understanding of semantic regions based on context or appearance.

<Task>:
1. Read and understand the sub-instruction to be executed.
2. Use the reasoning explanation to infer what skills are likely required to carry out that sub-instruction.
3. Choose the top 1 skill that is most relevant to the sub-instruction.

<Input>:
You will be given:
- The original full navigation instruction.
- The sub-instruction that should be executed next, based on reasoning.
- A reasoning explanation derived from the visual history and instruction.

Output exactly **one skill name** from the above list.
Do not provide explanations or additional text.

<Output Format>:
*****SKILL_NAME*****

<Example>
Original Whole Instruction: "At the bottom of the stairs, go through the nearest archway to your left. Head straight until you enter the room with a pool table. Step slightly to the left to get out of the way."

Sub-instruction to be executed for next step: "Head straight until you enter the room with a pool table."

Reasoning based on previous viewpoints path and original instruction: The agent appears to be just outside the archway. The next step is likely to involve entering the archway and preparing to head straight.

Expected Output:
*****Landmark Detection*****

---

<Reordered Whole Instruction>:
"{full_instruction}"

Sub-instruction to be executed for next step:
"{sub_instruction}"

<Reasoning based on previous viewpoints path and original instruction>:
"{reasoning}"
"""


def _fill(template: str, slots: dict[str, str]) -> str:
    out = template
    for name, value in slots.items():
        out = out.replace("{" + name + "}", value)
    return out


def temporal_instruction_prompt(path_images: str) -> str:
    return _fill(TEMPORAL_INSTRUCTION_PROMPT, {"path_images": path_images})


def atomic_instruction_prompt(path_images: str, skill_name: str) -> str:
    return _fill(
        ATOMIC_INSTRUCTION_PROMPT,
        {"path_images": path_images, "skill_name": skill_name},
    )


def reorder_prompt(instruction: str) -> str:
    return _fill(REORDER_PROMPT, {"instruction": instruction})


def localizer_prompt(
    instruction: str, previous_sub_instructions: str, viewpoint_summaries: str
) -> str:
    return _fill(
        LOCALIZER_PROMPT,
        {
            "instruction": instruction,
            "previous_sub_instructions": previous_sub_instructions,
            "viewpoint_summaries": viewpoint_summaries,
        },
    )


def skill_router_prompt(full_instruction: str, sub_instruction: str, reasoning: str) -> str:
    return _fill(
        SKILL_ROUTER_PROMPT,
        {
            "full_instruction": full_instruction,
            "sub_instruction": sub_instruction,
            "reasoning": reasoning,
        },
    )
