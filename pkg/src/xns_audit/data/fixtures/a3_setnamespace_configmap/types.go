package controllers

import (
	metav1 "k8s.io/apimachinery/pkg/apis/meta/v1"
)

// AppSpec defines the desired state of App.
type AppSpec struct {
	Endpoint        string `json:"endpoint"`
	ConfigName      string `json:"configName"`
	ConfigNamespace string `json:"configNamespace,omitempty"`
}

// App is the Schema for the apps API.
// +kubebuilder:object:root=true
type App struct {
	metav1.TypeMeta   `json:",inline"`
	metav1.ObjectMeta `json:"metadata,omitempty"`

	Spec AppSpec `json:"spec,omitempty"`
}
