package controllers

import (
	metav1 "k8s.io/apimachinery/pkg/apis/meta/v1"
)

// ObjectReference names an object in an arbitrary namespace.
type ObjectReference struct {
	Name      string `json:"name"`
	Namespace string `json:"namespace"`
}

// PipelineSpec defines the desired state of Pipeline.
type PipelineSpec struct {
	Credentials    ObjectReference `json:"credentials"`
	RunnerAccount  string          `json:"runnerAccount"`
	RunnerRoleName string          `json:"runnerRoleName"`
}

// Pipeline is the Schema for the pipelines API.
// +kubebuilder:object:root=true
type Pipeline struct {
	metav1.TypeMeta   `json:",inline"`
	metav1.ObjectMeta `json:"metadata,omitempty"`

	Spec PipelineSpec `json:"spec,omitempty"`
}
